#include "npplab/config.hpp"

#include "npplab/errors.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace npplab {
namespace {

using nlohmann::json;

// Reads known keys from a JSON object and rejects the rest.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be a JSON object");
  }

  bool has(const std::string& key) {
    known_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    out = convert<T>(key);
  }

  template <typename T>
  void get(const std::string& key, std::optional<T>& out) {
    known_.insert(key);
    if (!j_.contains(key)) return;
    if (j_.at(key).is_null()) {
      out.reset();
      return;
    }
    out = convert<T>(key);
  }

  const json& child(const std::string& key) {
    known_.insert(key);
    return j_.at(key);
  }

  std::string where(const std::string& key = {}) const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!known_.contains(key)) throw ConfigError("unknown config key '" + where(key) + "'");
    }
  }

 private:
  template <typename T>
  T convert(const std::string& key) {
    const json& v = j_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(where(key) + " must be a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(where(key) + " must be an integer");
      if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
        throw ConfigError(where(key) + " must be >= 0");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(where(key) + " must be a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(where(key) + " must be a string");
    }
    try {
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> known_;
};

void check_schema_version(ObjectReader& r, bool required) {
  int version = -1;
  r.get("schema_version", version);
  if (version == -1 && !required) return;
  if (version != kConfigSchemaVersion) {
    throw ConfigError("schema_version must be " + std::to_string(kConfigSchemaVersion));
  }
}

SyntheticSpec read_synthetic(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  check_schema_version(r, false);
  SyntheticSpec s;
  r.get("n_subjects", s.n_subjects);
  r.get("trials_per_subject_per_class", s.trials_per_subject_per_class);
  r.get("n_channels", s.n_channels);
  r.get("fs", s.fs);
  r.get("epoch_seconds", s.epoch_seconds);
  r.get("evoked_snr", s.evoked_snr);
  r.get("subject_variability", s.subject_variability);
  r.get("seed", s.seed);
  r.finish();
  return s;
}

json npp_json(double period, double duty, double phase) {
  return json{{"period_T", period}, {"duty_d", duty}, {"phase_phi", phase}};
}

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

json to_json(const SyntheticSpec& s) {
  return json{{"n_subjects", s.n_subjects},
              {"trials_per_subject_per_class", s.trials_per_subject_per_class},
              {"n_channels", s.n_channels},
              {"fs", s.fs},
              {"epoch_seconds", s.epoch_seconds},
              {"evoked_snr", s.evoked_snr},
              {"subject_variability", s.subject_variability},
              {"seed", s.seed}};
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  if (c.synthetic) j["dataset"]["synthetic"] = to_json(*c.synthetic);
  if (c.dataset_path) j["dataset"]["path"] = *c.dataset_path;
  j["preprocess"] = {{"target_fs", c.preprocess.target_fs},
                     {"band_low", c.preprocess.band_low},
                     {"band_high", c.preprocess.band_high},
                     {"clip_bounds", c.preprocess.clip_bounds
                                         ? json::array({c.preprocess.clip_bounds->first, c.preprocess.clip_bounds->second})
                                         : json(nullptr)},
                     {"apply_zscore", c.preprocess.apply_zscore}};
  j["model"] = {{"kind", to_string(c.model.kind)},
                {"csp_pairs", c.model.csp_pairs},
                {"xdawn_filters", c.model.xdawn_filters},
                {"xdawn_decim", c.model.xdawn_decim},
                {"xdawn_target_class", c.model.xdawn_target_class}};
  j["train"] = {{"l2_lambda", c.train.l2_lambda},
                {"max_epochs", c.train.max_epochs},
                {"learning_rate", c.train.learning_rate},
                {"patience", c.train.patience},
                {"seed", c.train.seed}};
  const PoisonSpec& p = c.poison;
  j["poison"] = {{"target_class", p.target_class},
                 {"amplitude_ratio", p.amplitude_ratio},
                 {"npp", npp_json(p.period, p.duty, p.phase)},
                 {"channel_fraction", p.channel_fraction},
                 {"random_phase", p.random_phase},
                 {"max_phase_frac", p.max_phase_frac},
                 {"poison_ratio", opt(p.poison_ratio)},
                 {"n_poison", opt(p.n_poison)}};
  const TestKeySpec& k = c.test_key;
  j["test_key"] = {{"amplitude_ratio", opt(k.amplitude_ratio)},
                   {"npp", {{"period_T", opt(k.period)}, {"duty_d", opt(k.duty)}, {"phase_phi", opt(k.phase)}}},
                   {"random_phase", opt(k.random_phase)},
                   {"max_phase_frac", opt(k.max_phase_frac)}};
  j["train_fraction"] = c.train_fraction;
  j["repeats"] = c.repeats;
  j["master_seed"] = c.master_seed;
  return j;
}

json to_json(const SweepSpec& s) {
  json values = json::array();
  for (const auto& v : s.values) values.push_back(v.size() == 1 ? json(v[0]) : json(v));
  return json{{"axis", to_string(s.axis)}, {"mode", to_string(s.mode)}, {"values", values}};
}

SyntheticSpec synthetic_spec_from_json(const json& j) {
  if (j.is_object() && !j.contains("schema_version")) throw ConfigError("schema_version must be " + std::to_string(kConfigSchemaVersion));
  return read_synthetic(j, "");
}

SweepSpec sweep_spec_from_json(const json& j) {
  ObjectReader r(j, "sweep");
  SweepSpec s;
  std::string axis = "poison_ratio";
  std::string mode = "matched";
  r.get("axis", axis);
  r.get("mode", mode);
  s.axis = sweep_axis_from_string(axis);
  s.mode = sweep_mode_from_string(mode);
  if (r.has("values")) {
    const json& values = r.child("values");
    if (!values.is_array()) throw ConfigError("sweep.values must be an array");
    for (const json& v : values) {
      if (v.is_number()) {
        s.values.push_back({v.get<double>()});
      } else if (v.is_array() && std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); })) {
        s.values.push_back(v.get<std::vector<double>>());
      } else {
        throw ConfigError("sweep.values entries must be numbers or arrays of numbers");
      }
    }
  }
  r.finish();
  s.validate();
  return s;
}

ExperimentConfig experiment_config_from_json(const json& j) {
  ObjectReader r(j, "");
  check_schema_version(r, true);
  ExperimentConfig c;

  if (r.has("dataset")) {
    ObjectReader d(r.child("dataset"), "dataset");
    if (d.has("synthetic")) c.synthetic = read_synthetic(d.child("synthetic"), "dataset.synthetic");
    std::optional<std::string> path;
    d.get("path", path);
    c.dataset_path = path;
    d.finish();
  }
  if (r.has("preprocess")) {
    ObjectReader p(r.child("preprocess"), "preprocess");
    p.get("target_fs", c.preprocess.target_fs);
    p.get("band_low", c.preprocess.band_low);
    p.get("band_high", c.preprocess.band_high);
    std::optional<std::vector<double>> clip;
    p.get("clip_bounds", clip);
    if (clip) {
      if (clip->size() != 2) throw ConfigError("preprocess.clip_bounds must be [lo, hi]");
      c.preprocess.clip_bounds = std::make_pair((*clip)[0], (*clip)[1]);
    }
    p.get("apply_zscore", c.preprocess.apply_zscore);
    p.finish();
  }
  if (r.has("model")) {
    ObjectReader m(r.child("model"), "model");
    std::string kind = to_string(c.model.kind);
    m.get("kind", kind);
    c.model.kind = feature_kind_from_string(kind);
    m.get("csp_pairs", c.model.csp_pairs);
    m.get("xdawn_filters", c.model.xdawn_filters);
    m.get("xdawn_decim", c.model.xdawn_decim);
    m.get("xdawn_target_class", c.model.xdawn_target_class);
    m.finish();
  }
  if (r.has("train")) {
    ObjectReader t(r.child("train"), "train");
    t.get("l2_lambda", c.train.l2_lambda);
    t.get("max_epochs", c.train.max_epochs);
    t.get("learning_rate", c.train.learning_rate);
    t.get("patience", c.train.patience);
    t.get("seed", c.train.seed);
    t.finish();
  }
  if (r.has("poison")) {
    ObjectReader p(r.child("poison"), "poison");
    PoisonSpec& ps = c.poison;
    p.get("target_class", ps.target_class);
    p.get("amplitude_ratio", ps.amplitude_ratio);
    if (p.has("npp")) {
      ObjectReader n(p.child("npp"), "poison.npp");
      n.get("period_T", ps.period);
      n.get("duty_d", ps.duty);
      n.get("phase_phi", ps.phase);
      n.finish();
    }
    p.get("channel_fraction", ps.channel_fraction);
    p.get("random_phase", ps.random_phase);
    p.get("max_phase_frac", ps.max_phase_frac);
    p.get("poison_ratio", ps.poison_ratio);
    p.get("n_poison", ps.n_poison);
    p.finish();
  }
  if (r.has("test_key")) {
    ObjectReader k(r.child("test_key"), "test_key");
    TestKeySpec& ks = c.test_key;
    k.get("amplitude_ratio", ks.amplitude_ratio);
    if (k.has("npp")) {
      ObjectReader n(k.child("npp"), "test_key.npp");
      n.get("period_T", ks.period);
      n.get("duty_d", ks.duty);
      n.get("phase_phi", ks.phase);
      n.finish();
    }
    k.get("random_phase", ks.random_phase);
    k.get("max_phase_frac", ks.max_phase_frac);
    k.finish();
  }
  r.get("train_fraction", c.train_fraction);
  r.get("repeats", c.repeats);
  r.get("master_seed", c.master_seed);
  if (r.has("sweep")) sweep_spec_from_json(r.child("sweep"));
  r.finish();
  c.validate();
  return c;
}

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void apply_overrides(json& j, const std::vector<std::string>& overrides) {
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' is not of the form key=value");
    const std::string key = o.substr(0, eq);
    const std::string text = o.substr(eq + 1);

    json* node = &j;
    std::stringstream ss(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) {
      if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
      parts.push_back(part);
    }
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      json& next = (*node)[parts[i]];
      if (next.is_null()) next = json::object();
      if (!next.is_object()) throw ConfigError("override '" + key + "': '" + parts[i] + "' is not an object");
      node = &next;
    }
    json value;
    try {
      value = json::parse(text);
    } catch (const json::exception&) {
      value = text;
    }
    (*node)[parts.back()] = std::move(value);
  }
}

std::string fingerprint(const json& j) {
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string fingerprint(const ExperimentConfig& config) { return fingerprint(to_json(config)); }

}  // namespace npplab
