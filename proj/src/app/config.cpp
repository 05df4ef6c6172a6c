#include "csde/app/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "csde/errors.hpp"
#include "csde/io.hpp"

namespace csde::app {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> parts;
  if (trim(s).empty()) return parts;
  std::size_t start = 0;
  while (true) {
    auto comma = s.find(',', start);
    parts.push_back(trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return parts;
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError("config key '" + std::string(key) + "': expected a non-negative integer, got '" +
                      std::string(v) + "'");
  return out;
}

double parse_real(std::string_view key, std::string_view v) {
  try {
    return parse_double(v);
  } catch (const ConfigError&) {
    throw ConfigError("config key '" + std::string(key) + "': expected a number, got '" + std::string(v) + "'");
  }
}

std::vector<double> parse_reals(std::string_view key, std::string_view v) {
  std::vector<double> out;
  for (auto part : split_list(v)) out.push_back(parse_real(key, part));
  return out;
}

std::vector<Eigen::Index> parse_widths(std::string_view key, std::string_view v) {
  std::vector<Eigen::Index> out;
  for (auto part : split_list(v)) out.push_back(static_cast<Eigen::Index>(parse_u64(key, part)));
  if (out.empty()) throw ConfigError("config key '" + std::string(key) + "': empty width list");
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>)
      s += format_double(v[i]);
    else
      s += std::to_string(v[i]);
  }
  return s;
}

TaskKind parse_task(std::string_view v) {
  if (v == "gmm_translate") return TaskKind::kGmmTranslate;
  if (v == "image_translate") return TaskKind::kImageTranslate;
  throw ConfigError("unknown task '" + std::string(v) + "' (expected gmm_translate or image_translate)");
}

ScoreKind parse_score_kind(std::string_view v) {
  if (v == "analytic") return ScoreKind::kAnalytic;
  if (v == "net") return ScoreKind::kNet;
  throw ConfigError("unknown score kind '" + std::string(v) + "' (expected analytic or net)");
}

std::filesystem::path existing_path(std::string_view key, std::string_view v) {
  std::filesystem::path p{std::string(v)};
  if (!std::filesystem::exists(p))
    throw ConfigError("config key '" + std::string(key) + "': file '" + p.string() + "' does not exist");
  return p;
}

// (key, value) lines of a config text, comments and blanks stripped.
std::vector<std::pair<std::string, std::string>> assignments(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t start = 0;
  int line_no = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) {
      try {
        out.push_back(split_assignment(line));
      } catch (const ConfigError& e) {
        throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return out;
}

}  // namespace

std::string_view to_string(TaskKind kind) {
  return kind == TaskKind::kGmmTranslate ? "gmm_translate" : "image_translate";
}

std::string_view to_string(ScoreKind kind) { return kind == ScoreKind::kAnalytic ? "analytic" : "net"; }

std::pair<std::string, std::string> split_assignment(std::string_view text) {
  auto eq = text.find('=');
  if (eq == std::string_view::npos) throw ConfigError("expected key = value, got '" + std::string(text) + "'");
  auto key = trim(text.substr(0, eq));
  if (key.empty()) throw ConfigError("empty key in '" + std::string(text) + "'");
  return {std::string(key), std::string(trim(text.substr(eq + 1)))};
}

RunConfig RunConfig::defaults(TaskKind task) {
  RunConfig c;
  c.task = task;
  if (task == TaskKind::kGmmTranslate) {
    c.score_kind = ScoreKind::kAnalytic;
    c.guidance.lambda = kGmmCosineLambda;
    c.ablate_lambdas_cosine = {kGmmCosineLambda, 6.0};
    c.ablate_lambdas_neg_l2 = {0.035, kGmmNegL2Lambda};
  }
  return c;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  using Setter = std::function<void(RunConfig&, std::string_view, std::string_view)>;
  static const std::map<std::string, Setter, std::less<>> setters = {
      {"task", [](RunConfig& c, auto, auto v) { c.task = parse_task(v); }},
      {"seed", [](RunConfig& c, auto k, auto v) { c.seed = parse_u64(k, v); }},
      {"out", [](RunConfig& c, auto, auto v) { c.out = std::string(v); }},
      {"schedule.beta_min", [](RunConfig& c, auto k, auto v) { c.schedule.beta_min = parse_real(k, v); }},
      {"schedule.beta_max", [](RunConfig& c, auto k, auto v) { c.schedule.beta_max = parse_real(k, v); }},
      {"data.n_train", [](RunConfig& c, auto k, auto v) { c.n_train = parse_u64(k, v); }},
      {"data.n_eval", [](RunConfig& c, auto k, auto v) { c.n_eval = parse_u64(k, v); }},
      {"data.n_reference", [](RunConfig& c, auto k, auto v) { c.n_reference = parse_u64(k, v); }},
      {"gmm.invariant_offset", [](RunConfig& c, auto k, auto v) { c.mixture.invariant_offset = parse_real(k, v); }},
      {"gmm.domain_offset", [](RunConfig& c, auto k, auto v) { c.mixture.domain_offset = parse_real(k, v); }},
      {"gmm.variance", [](RunConfig& c, auto k, auto v) { c.mixture.variance = parse_real(k, v); }},
      {"image.side", [](RunConfig& c, auto k, auto v) { c.image.side = static_cast<int>(parse_u64(k, v)); }},
      {"image.min_extent", [](RunConfig& c, auto k, auto v) { c.image.min_extent = parse_real(k, v); }},
      {"image.max_extent", [](RunConfig& c, auto k, auto v) { c.image.max_extent = parse_real(k, v); }},
      {"image.min_intensity", [](RunConfig& c, auto k, auto v) { c.image.min_intensity = parse_real(k, v); }},
      {"image.max_intensity", [](RunConfig& c, auto k, auto v) { c.image.max_intensity = parse_real(k, v); }},
      {"image.low_pass", [](RunConfig& c, auto k, auto v) { c.low_pass_factor = static_cast<int>(parse_u64(k, v)); }},
      {"encoder.hidden_widths", [](RunConfig& c, auto k, auto v) { c.encoder.hidden_widths = parse_widths(k, v); }},
      {"encoder.proj_widths", [](RunConfig& c, auto k, auto v) { c.encoder.proj_widths = parse_widths(k, v); }},
      {"encoder.time_embed_dim",
       [](RunConfig& c, auto k, auto v) { c.encoder.time_embed_dim = static_cast<Eigen::Index>(parse_u64(k, v)); }},
      {"train.iterations", [](RunConfig& c, auto k, auto v) { c.train.iterations = parse_u64(k, v); }},
      {"train.pairs_per_batch", [](RunConfig& c, auto k, auto v) { c.train.pairs_per_batch = parse_u64(k, v); }},
      {"train.learning_rate", [](RunConfig& c, auto k, auto v) { c.train.learning_rate = parse_real(k, v); }},
      {"train.weight_decay", [](RunConfig& c, auto k, auto v) { c.train.weight_decay = parse_real(k, v); }},
      {"train.temperature", [](RunConfig& c, auto k, auto v) { c.train.temperature = parse_real(k, v); }},
      {"train.beta1", [](RunConfig& c, auto k, auto v) { c.train.beta1 = parse_real(k, v); }},
      {"train.beta2", [](RunConfig& c, auto k, auto v) { c.train.beta2 = parse_real(k, v); }},
      {"train.epsilon", [](RunConfig& c, auto k, auto v) { c.train.epsilon = parse_real(k, v); }},
      {"score.kind", [](RunConfig& c, auto, auto v) { c.score_kind = parse_score_kind(v); }},
      {"score.hidden_widths", [](RunConfig& c, auto k, auto v) { c.score.hidden_widths = parse_widths(k, v); }},
      {"score.head_width",
       [](RunConfig& c, auto k, auto v) { c.score.head_width = static_cast<Eigen::Index>(parse_u64(k, v)); }},
      {"score.time_embed_dim",
       [](RunConfig& c, auto k, auto v) { c.score.time_embed_dim = static_cast<Eigen::Index>(parse_u64(k, v)); }},
      {"score.iterations", [](RunConfig& c, auto k, auto v) { c.score.iterations = parse_u64(k, v); }},
      {"score.batch_size", [](RunConfig& c, auto k, auto v) { c.score.batch_size = parse_u64(k, v); }},
      {"score.learning_rate", [](RunConfig& c, auto k, auto v) { c.score.learning_rate = parse_real(k, v); }},
      {"score.weight_decay", [](RunConfig& c, auto k, auto v) { c.score.weight_decay = parse_real(k, v); }},
      {"guidance.lambda", [](RunConfig& c, auto k, auto v) { c.guidance.lambda = parse_real(k, v); }},
      {"guidance.similarity", [](RunConfig& c, auto, auto v) { c.guidance.similarity = parse_similarity(v); }},
      {"guidance.P", [](RunConfig& c, auto k, auto v) { c.guidance.initial_time = parse_real(k, v); }},
      {"guidance.R", [](RunConfig& c, auto k, auto v) { c.guidance.steps = parse_u64(k, v); }},
      {"ablate.lambdas_cosine", [](RunConfig& c, auto k, auto v) { c.ablate_lambdas_cosine = parse_reals(k, v); }},
      {"ablate.lambdas_neg_l2", [](RunConfig& c, auto k, auto v) { c.ablate_lambdas_neg_l2 = parse_reals(k, v); }},
      {"ablate.P", [](RunConfig& c, auto k, auto v) { c.ablate_P = parse_reals(k, v); }},
      {"ablate.sweep_P", [](RunConfig& c, auto k, auto v) { c.sweep_P = parse_reals(k, v); }},
      {"paths.encoder", [](RunConfig& c, auto k, auto v) { c.encoder_path = existing_path(k, v); }},
      {"paths.score", [](RunConfig& c, auto k, auto v) { c.score_path = existing_path(k, v); }},
  };
  auto it = setters.find(key);
  if (it == setters.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second(*this, key, trim(value));
}

RunConfig RunConfig::parse(std::string_view text, const std::vector<std::string>& overrides) {
  auto lines = assignments(text);
  std::vector<std::pair<std::string, std::string>> extra;
  for (const auto& o : overrides) extra.push_back(split_assignment(o));

  TaskKind task = TaskKind::kImageTranslate;
  for (const auto* list : {&lines, &extra})
    for (const auto& [k, v] : *list)
      if (k == "task") task = parse_task(v);

  RunConfig c = defaults(task);
  for (const auto* list : {&lines, &extra})
    for (const auto& [k, v] : *list) c.set(k, v);
  c.validate();
  return c;
}

std::string RunConfig::serialize() const {
  std::ostringstream os;
  auto kv = [&os](std::string_view k, const std::string& v) { os << k << " = " << v << '\n'; };
  kv("task", std::string(to_string(task)));
  kv("seed", std::to_string(seed));
  kv("out", out.string());
  kv("schedule.beta_min", format_double(schedule.beta_min));
  kv("schedule.beta_max", format_double(schedule.beta_max));
  kv("data.n_train", std::to_string(n_train));
  kv("data.n_eval", std::to_string(n_eval));
  kv("data.n_reference", std::to_string(n_reference));
  kv("gmm.invariant_offset", format_double(mixture.invariant_offset));
  kv("gmm.domain_offset", format_double(mixture.domain_offset));
  kv("gmm.variance", format_double(mixture.variance));
  kv("image.side", std::to_string(image.side));
  kv("image.min_extent", format_double(image.min_extent));
  kv("image.max_extent", format_double(image.max_extent));
  kv("image.min_intensity", format_double(image.min_intensity));
  kv("image.max_intensity", format_double(image.max_intensity));
  kv("image.low_pass", std::to_string(low_pass_factor));
  kv("encoder.hidden_widths", join(encoder.hidden_widths));
  kv("encoder.proj_widths", join(encoder.proj_widths));
  kv("encoder.time_embed_dim", std::to_string(encoder.time_embed_dim));
  kv("train.iterations", std::to_string(train.iterations));
  kv("train.pairs_per_batch", std::to_string(train.pairs_per_batch));
  kv("train.learning_rate", format_double(train.learning_rate));
  kv("train.weight_decay", format_double(train.weight_decay));
  kv("train.temperature", format_double(train.temperature));
  kv("train.beta1", format_double(train.beta1));
  kv("train.beta2", format_double(train.beta2));
  kv("train.epsilon", format_double(train.epsilon));
  kv("score.kind", std::string(to_string(score_kind)));
  kv("score.hidden_widths", join(score.hidden_widths));
  kv("score.head_width", std::to_string(score.head_width));
  kv("score.time_embed_dim", std::to_string(score.time_embed_dim));
  kv("score.iterations", std::to_string(score.iterations));
  kv("score.batch_size", std::to_string(score.batch_size));
  kv("score.learning_rate", format_double(score.learning_rate));
  kv("score.weight_decay", format_double(score.weight_decay));
  kv("guidance.lambda", format_double(guidance.lambda));
  kv("guidance.similarity", std::string(csde::to_string(guidance.similarity)));
  kv("guidance.P", format_double(guidance.initial_time));
  kv("guidance.R", std::to_string(guidance.steps));
  kv("ablate.lambdas_cosine", join(ablate_lambdas_cosine));
  kv("ablate.lambdas_neg_l2", join(ablate_lambdas_neg_l2));
  kv("ablate.P", join(ablate_P));
  kv("ablate.sweep_P", join(sweep_P));
  if (encoder_path) kv("paths.encoder", encoder_path->string());
  if (score_path) kv("paths.score", score_path->string());
  return os.str();
}

void RunConfig::validate() const {
  schedule.validate();
  train.validate();
  guidance.validate(schedule.horizon);
  encoder_config().validate();
  if (n_train < 1 || n_eval < 1) throw ConfigError("data.n_train and data.n_eval must be >= 1");
  if (!(mixture.variance > 0.0)) throw ConfigError("gmm.variance must be positive");
  if (task == TaskKind::kImageTranslate) {
    if (score_kind == ScoreKind::kAnalytic) throw ConfigError("image_translate has no analytic score; use score.kind = net");
    if (image.side < 1 || low_pass_factor < 1 || image.side % low_pass_factor != 0)
      throw ConfigError("image.low_pass must divide image.side");
    if (!(image.min_extent > 0.0 && image.min_extent <= image.max_extent && 2.0 * image.max_extent < image.side))
      throw ConfigError("image extents must satisfy 0 < min <= max < side / 2");
    if (!(image.min_intensity >= 0.0 && image.min_intensity <= image.max_intensity && image.max_intensity <= 1.0))
      throw ConfigError("image intensities must satisfy 0 <= min <= max <= 1");
  }
  for (double p : ablate_P)
    if (!(p > 0.0 && p <= schedule.horizon)) throw ConfigError("ablate.P values must be in (0, T]");
  for (double p : sweep_P)
    if (!(p > 0.0 && p <= schedule.horizon)) throw ConfigError("ablate.sweep_P values must be in (0, T]");
  for (const auto* ls : {&ablate_lambdas_cosine, &ablate_lambdas_neg_l2})
    for (double l : *ls)
      if (!(l >= 0.0)) throw ConfigError("ablation lambdas must be >= 0");
}

Eigen::Index RunConfig::data_dim() const {
  return task == TaskKind::kGmmTranslate ? SyntheticTask::kDim : static_cast<Eigen::Index>(image.side) * image.side;
}

EncoderConfig RunConfig::encoder_config() const {
  EncoderConfig c = encoder;
  c.input_dim = data_dim();
  return c;
}

InvariantTransform RunConfig::transform() const {
  if (task == TaskKind::kGmmTranslate) return SyntheticTask::make(mixture).transform();
  return LowPass{low_pass_factor};
}

}  // namespace csde::app
