#include "progmotion/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace progmotion {

RunConfig::RunConfig() {
  // Joint and coordinate counts are taken from the data unless set explicitly.
  model.joints = 0;
  model.dims = 0;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
  throw ConfigError(key + ": invalid value '" + value + "' (expected " + expected + ")");
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) bad_value(key, v, "a number");
    return d;
  } catch (const std::logic_error&) {
    bad_value(key, v, "a number");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "true or false");
}

template <typename F>
auto parse_enum(const std::string& key, const std::string& v, F&& parse) {
  try {
    return parse(v);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (double d : v) out += (out.empty() ? "" : ",") + format_double(d);
  return out;
}

std::string adjacency_name(AdjacencyInit a) { return a == AdjacencyInit::kUniform ? "uniform" : "identity-noise"; }

AdjacencyInit parse_adjacency(const std::string& v) {
  if (v == "uniform") return AdjacencyInit::kUniform;
  if (v == "identity-noise") return AdjacencyInit::kIdentityNoise;
  throw std::invalid_argument("unknown adjacency init '" + v + "' (expected uniform or identity-noise)");
}

std::string padding_name(Padding p) { return p == Padding::kLastPose ? "last-pose" : "mean-x"; }

Padding parse_padding(const std::string& v) {
  if (v == "last-pose") return Padding::kLastPose;
  if (v == "mean-x") return Padding::kMeanX;
  throw std::invalid_argument("unknown padding '" + v + "' (expected last-pose or mean-x)");
}

std::string smoother_name(TargetSmoother::Kind k) { return k == TargetSmoother::Kind::kAas ? "aas" : "gaussian"; }

TargetSmoother::Kind parse_smoother(const std::string& v) {
  if (v == "aas") return TargetSmoother::Kind::kAas;
  if (v == "gaussian") return TargetSmoother::Kind::kGaussian;
  throw std::invalid_argument("unknown smoother '" + v + "' (expected aas or gaussian)");
}

struct Field {
  std::function<void(RunConfig&, const std::string& key, const std::string& value)> set;
  std::function<std::string(const RunConfig&)> get;
};

// Ordered so the canonical text groups keys by section.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
#define SIZE_FIELD(key, expr)                                                                                  \
  t.push_back({key,                                                                                            \
               {[](RunConfig& c, const std::string& k, const std::string& v) { c.expr = parse_size(k, v); },   \
                [](const RunConfig& c) { return std::to_string(c.expr); }}})
#define DOUBLE_FIELD(key, expr)                                                                                \
  t.push_back({key,                                                                                            \
               {[](RunConfig& c, const std::string& k, const std::string& v) { c.expr = parse_double(k, v); }, \
                [](const RunConfig& c) { return format_double(c.expr); }}})
#define BOOL_FIELD(key, expr)                                                                                  \
  t.push_back({key,                                                                                            \
               {[](RunConfig& c, const std::string& k, const std::string& v) { c.expr = parse_bool(k, v); },   \
                [](const RunConfig& c) { return std::string(c.expr ? "true" : "false"); }}})
#define ENUM_FIELD(key, expr, parse, name)                                                                     \
  t.push_back({key,                                                                                            \
               {[](RunConfig& c, const std::string& k, const std::string& v) {                                 \
                  c.expr = parse_enum(k, v, [](const std::string& s) { return parse(s); });                    \
                },                                                                                             \
                [](const RunConfig& c) { return std::string(name(c.expr)); }}})

    SIZE_FIELD("model.stages", model.stages);
    SIZE_FIELD("model.observed", model.observed);
    SIZE_FIELD("model.future", model.future);
    SIZE_FIELD("model.joints", model.joints);
    SIZE_FIELD("model.dims", model.dims);
    SIZE_FIELD("model.features", model.features);
    SIZE_FIELD("model.encoder_gcbs", model.encoder_gcbs);
    SIZE_FIELD("model.decoder_gcbs", model.decoder_gcbs);
    SIZE_FIELD("model.gcb_budget", model.gcb_budget);
    SIZE_FIELD("model.copy_count", model.copy_count);
    ENUM_FIELD("model.copy_axis", model.copy_axis, parse_copy_axis, to_string);
    DOUBLE_FIELD("model.dropout", model.dropout_rate);
    BOOL_FIELD("model.share_stage_weights", model.share_stage_weights);
    ENUM_FIELD("model.adjacency_init", model.adjacency_init, parse_adjacency, adjacency_name);
    BOOL_FIELD("model.projection_bias", model.projection_bias);

    DOUBLE_FIELD("train.lr", train.lr0);
    DOUBLE_FIELD("train.lr_decay", train.lr_decay);
    SIZE_FIELD("train.epochs", train.epochs);
    SIZE_FIELD("train.batch_size", train.batch_size);
    DOUBLE_FIELD("train.beta1", train.beta1);
    DOUBLE_FIELD("train.beta2", train.beta2);
    DOUBLE_FIELD("train.adam_eps", train.adam_eps);
    ENUM_FIELD("train.loss", train.loss, parse_loss_kind, to_string);
    ENUM_FIELD("train.supervision", train.supervision, parse_supervision, to_string);
    ENUM_FIELD("train.smoother", train.smoother.kind, parse_smoother, smoother_name);
    SIZE_FIELD("train.gaussian_window", train.smoother.window);
    ENUM_FIELD("train.padding", train.padding, parse_padding, padding_name);
    SIZE_FIELD("train.padding_x", train.padding_x);
    SIZE_FIELD("train.max_steps", train.max_steps);

    t.push_back({"data.manifest",
                 {[](RunConfig& c, const std::string&, const std::string& v) { c.data_manifest = v; },
                  [](const RunConfig& c) { return c.data_manifest; }}});
    SIZE_FIELD("data.stride", data_stride);

    t.push_back({"eval.horizons",
                 {[](RunConfig& c, const std::string& k, const std::string& v) {
                    c.horizons_ms.clear();
                    std::stringstream ss(v);
                    for (std::string item; std::getline(ss, item, ',');) {
                      item = trim(item);
                      if (!item.empty()) c.horizons_ms.push_back(parse_double(k, item));
                    }
                  },
                  [](const RunConfig& c) { return join_doubles(c.horizons_ms); }}});
    ENUM_FIELD("eval.metric", metric, parse_metric, to_string);

    SIZE_FIELD("run.seed", train.seed);
    t.push_back({"run.out",
                 {[](RunConfig& c, const std::string&, const std::string& v) { c.out = v; },
                  [](const RunConfig& c) { return c.out.string(); }}});
#undef SIZE_FIELD
#undef DOUBLE_FIELD
#undef BOOL_FIELD
#undef ENUM_FIELD
    return t;
  }();
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& [name, field] : fields())
    if (name == key) return &field;
  return nullptr;
}

}  // namespace

void apply_setting(RunConfig& cfg, const std::string& dotted_key, const std::string& value) {
  const Field* f = find_field(dotted_key);
  if (!f) throw ConfigError("unknown config key '" + dotted_key + "'");
  f->set(cfg, dotted_key, trim(value));
}

void apply_config_text(RunConfig& cfg, const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("config key '" + section + "' is outside any [section]");
    for (const auto& [key, node] : body) apply_setting(cfg, section + "." + key, node.data());
  }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    apply_config_text(cfg, ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not of the form section.key=value");
    apply_setting(cfg, trim(o.substr(0, eq)), o.substr(eq + 1));
  }
}

std::string to_config_text(const RunConfig& cfg) {
  std::ostringstream os;
  std::string section;
  for (const auto& [name, field] : fields()) {
    const auto dot = name.find('.');
    const std::string s = name.substr(0, dot);
    if (s != section) {
      if (!section.empty()) os << '\n';
      os << '[' << s << "]\n";
      section = s;
    }
    os << name.substr(dot + 1) << " = " << field.get(cfg) << '\n';
  }
  return os.str();
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [name, field] : fields()) out.push_back(name);
  return out;
}

void validate(const RunConfig& cfg) {
  ModelConfig m = cfg.model;
  if (m.joints == 0) m.joints = 1;
  if (m.dims == 0) m.dims = 1;
  try {
    m.validate();
    cfg.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (cfg.data_stride < 1) throw ConfigError("data.stride must be >= 1");
  if (cfg.train.padding == Padding::kMeanX && cfg.train.padding_x > cfg.model.future)
    throw ConfigError("train.padding_x must not exceed model.future");
  for (double h : cfg.horizons_ms)
    if (!(h > 0)) throw ConfigError("eval.horizons must be positive");
}

std::vector<double> resolved_horizons(const RunConfig& cfg, double fps) {
  return cfg.horizons_ms.empty() ? default_horizons(cfg.model.future, fps) : cfg.horizons_ms;
}

}  // namespace progmotion
