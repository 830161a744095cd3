#include "lyricsense/model.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <vector>

#include "lyricsense/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace lyricsense {

Model Model::create(OrdinalStrategy strategy, const BackboneConfig& base,
                    LossWeights weights) {
  return {strategy, weights, ModelParams::init(configure_for(strategy, base))};
}

Model::Prediction Model::predict(const Eigen::MatrixXd& sentences) const {
  const DocForward f = forward(params, sentences, /*keep_trace=*/false);
  Prediction p;
  for (std::size_t a = 0; a < kNumAspects; ++a) {
    p.probabilities[a] = class_distribution(
        strategy, f.logits.row(static_cast<Eigen::Index>(a)).transpose());
    p.levels[a] = argmax_level(p.probabilities[a]);
  }
  return p;
}

json Model::header_json() const {
  return {{"backbone", params.config.to_json()},
          {"strategy", std::string(strategy_name(strategy))},
          {"loss_weights", {{"cls", weights.cls}, {"rank", weights.rank}}},
          {"parameter_count", params.values.size()}};
}

namespace {

constexpr char kMagic[4] = {'O', 'R', 'D', 'M'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u(const std::vector<std::uint8_t>& in, std::size_t& pos,
                    int width, const char* what) {
  if (in.size() - pos < static_cast<std::size_t>(width))
    throw FormatError(std::string("truncated checkpoint: expected ") + what, pos);
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) v |= std::uint64_t{in[pos + i]} << (8 * i);
  pos += static_cast<std::size_t>(width);
  return v;
}

}  // namespace

void save_checkpoint(const fs::path& path, const Model& model, const json& meta) {
  json header = model.header_json();
  header["meta"] = meta;
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u32(out, kCheckpointVersion);
  put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  put_u64(out, model.params.values.size());
  for (double v : model.params.values) put_u64(out, std::bit_cast<std::uint64_t>(v));

  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw InputError("cannot write checkpoint: " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
}

LoadedCheckpoint load_checkpoint(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open checkpoint: " + path.string());
  const std::vector<std::uint8_t> in((std::istreambuf_iterator<char>(f)),
                                     std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  if (in.size() < 4 || !std::equal(kMagic, kMagic + 4, in.begin()))
    throw FormatError("not a model checkpoint (bad magic)", 0);
  pos = 4;
  const auto version = get_u(in, pos, 4, "version");
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
  const auto header_len = get_u(in, pos, 8, "header length");
  if (in.size() - pos < header_len)
    throw FormatError("truncated checkpoint header", pos);
  json header;
  try {
    header = json::parse(in.begin() + static_cast<std::ptrdiff_t>(pos),
                         in.begin() + static_cast<std::ptrdiff_t>(pos + header_len));
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint header is not valid JSON: ") + e.what(), pos);
  }
  pos += header_len;

  LoadedCheckpoint out{
      {parse_strategy(header.at("strategy").get<std::string>()),
       {header.at("loss_weights").at("cls").get<double>(),
        header.at("loss_weights").at("rank").get<double>()},
       ModelParams::zeros(BackboneConfig::from_json(header.at("backbone")))},
      header.value("meta", json::object())};
  if (configure_for(out.model.strategy, out.model.params.config) !=
      out.model.params.config)
    throw FormatError("checkpoint backbone heads do not match its strategy", 0);

  const auto count_at = pos;
  const auto count = get_u(in, pos, 8, "parameter count");
  if (count != out.model.params.values.size())
    throw FormatError("checkpoint holds " + std::to_string(count) +
                          " parameters, config implies " +
                          std::to_string(out.model.params.values.size()),
                      count_at);
  if (in.size() - pos != count * 8)
    throw FormatError("checkpoint parameter payload has wrong length", pos);
  for (auto& v : out.model.params.values) {
    v = std::bit_cast<double>(get_u(in, pos, 8, "parameter"));
    if (!std::isfinite(v)) throw FormatError("non-finite parameter", pos - 8);
  }
  return out;
}

LoadedCheckpoint load_checkpoint(const fs::path& path,
                                 const BackboneConfig& expected) {
  auto out = load_checkpoint(path);
  if (!(out.model.params.config == expected))
    throw InputError("checkpoint config does not match: checkpoint has " +
                     out.model.params.config.to_json().dump() + ", expected " +
                     expected.to_json().dump());
  return out;
}

}  // namespace lyricsense
