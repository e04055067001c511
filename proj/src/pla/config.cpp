#include "pla/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace pla {

namespace {

const std::map<std::string, std::string>& default_values() {
  static const std::map<std::string, std::string> defaults = {
      {"data", "synthetic"},
      {"manifest", ""},
      {"images_dir", ""},
      {"class_names", "MEL,NV,BCC,AKIEC,BKL,DF,VASC"},
      {"benign_classes", "NV,BKL,DF,VASC"},
      {"split_seed", "1"},
      {"train_parts", "0,1"},
      {"val_part", "2"},
      {"test_part", "3"},
      {"synth_train_per_class", "20"},
      {"synth_val_per_class", "10"},
      {"synth_test_per_class", "10"},
      {"synth_image_size", "192"},
      {"synth_distractors", "2"},
      {"synth_noise", "0.05"},
      {"synth_signal_amplitude", "0.45"},
      {"synth_distractor_amplitude", "0.25"},
      {"synth_center_signal", "false"},
      {"synth_diagnosis_dist", "0.54,0.05,0.05,0.36"},
      {"synth_format", "png"},
      {"strategy", "ordered"},
      {"input_size", "64"},
      {"n_crops", "9"},
      {"p_d", "0"},
      {"single_crop_scale_min", "0.7"},
      {"single_crop_scale_max", "1.1"},
      {"backbone_channels", "16,32,64,128"},
      {"aggregator", "attention"},
      {"attention_placement", "end"},
      {"gru_hidden", "128"},
      {"balancing", "none"},
      {"k", "1.0"},
      {"diag_multipliers", "1.0,1.2,1.4,1.6"},
      {"diag_strict", "false"},
      {"epochs", "5"},
      {"batch_size", "14"},
      {"learning_rate", "0.001"},
      {"beta1", "0.9"},
      {"beta2", "0.999"},
      {"epsilon", "1e-8"},
      {"seed", "1"},
      {"augment", "true"},
      {"deterministic", "false"},
      {"sweep_seeds", "3"},
      {"out_dir", "out"},
      {"run_id", "run"},
      {"overwrite", "false"},
  };
  return defaults;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::config, "config key '" + key + "': expected bool, got '" + v + "'");
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    int x = std::stoi(v, &used);
    require(used == v.size(), ErrorCode::config, "");
    return x;
  } catch (const std::exception&) {
    throw Error(ErrorCode::config, "config key '" + key + "': expected integer, got '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    require(used == v.size(), ErrorCode::config, "");
    return x;
  } catch (const std::exception&) {
    throw Error(ErrorCode::config, "config key '" + key + "': expected number, got '" + v + "'");
  }
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& tok : split_string(v, ','))
    if (!trim(tok).empty()) out.push_back(parse_int(key, trim(tok)));
  return out;
}

std::vector<double> parse_double_list(const std::string& key,
                                      const std::string& v) {
  std::vector<double> out;
  for (const auto& tok : split_string(v, ','))
    if (!trim(tok).empty()) out.push_back(parse_double(key, trim(tok)));
  return out;
}

// Per-class count list: a single value replicates across classes.
std::vector<int> parse_counts(const std::string& key, const std::string& v,
                              int n_classes) {
  auto list = parse_int_list(key, v);
  if (static_cast<int>(list.size()) == 1)
    return std::vector<int>(static_cast<std::size_t>(n_classes), list[0]);
  require(static_cast<int>(list.size()) == n_classes, ErrorCode::config,
          "config key '" + key + "': expected 1 or " +
              std::to_string(n_classes) + " values");
  return list;
}

}  // namespace

KvConfig::KvConfig() : values_(default_values()) {}

void KvConfig::load_file(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrorCode::io, "cannot open config file: " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    require(eq != std::string::npos, ErrorCode::config,
            path + ":" + std::to_string(line_no) + ": expected key = value");
    set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
}

void KvConfig::set(const std::string& key, const std::string& value) {
  require(default_values().count(key) > 0, ErrorCode::config,
          "unknown config key: " + key);
  values_[key] = value;
}

const std::string& KvConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  require(it != values_.end(), ErrorCode::config, "unknown config key: " + key);
  return it->second;
}

std::string KvConfig::resolved_text() const {
  std::ostringstream os;
  for (const auto& [k, v] : values_) os << k << " = " << v << "\n";
  return os.str();
}

ExperimentConfig resolve_config(const KvConfig& kv) {
  ExperimentConfig c;
  c.data = kv.get("data");
  require(c.data == "synthetic" || c.data == "manifest", ErrorCode::config,
          "data: must be 'synthetic' or 'manifest'");
  c.manifest = kv.get("manifest");
  require(c.data != "manifest" || !c.manifest.empty(), ErrorCode::config,
          "data = manifest requires a manifest path");
  c.images_dir = kv.get("images_dir");
  for (const auto& tok : split_string(kv.get("class_names"), ','))
    if (!trim(tok).empty()) c.class_names.push_back(trim(tok));
  require(c.class_names.size() >= 2, ErrorCode::config,
          "class_names: need at least two classes");
  for (const auto& tok : split_string(kv.get("benign_classes"), ',')) {
    std::string name = trim(tok);
    if (name.empty()) continue;
    auto it = std::find(c.class_names.begin(), c.class_names.end(), name);
    require(it != c.class_names.end(), ErrorCode::config,
            "benign_classes: '" + name + "' is not in class_names");
    c.benign_classes.push_back(
        static_cast<int>(it - c.class_names.begin()));
  }
  c.split_seed = static_cast<std::uint64_t>(parse_int("split_seed", kv.get("split_seed")));
  c.train_parts = parse_int_list("train_parts", kv.get("train_parts"));
  c.val_part = parse_int("val_part", kv.get("val_part"));
  c.test_part = parse_int("test_part", kv.get("test_part"));
  int nc = c.n_classes();
  c.synth_train_per_class = parse_counts("synth_train_per_class", kv.get("synth_train_per_class"), nc);
  c.synth_val_per_class = parse_counts("synth_val_per_class", kv.get("synth_val_per_class"), nc);
  c.synth_test_per_class = parse_counts("synth_test_per_class", kv.get("synth_test_per_class"), nc);
  c.synth_image_size = parse_int("synth_image_size", kv.get("synth_image_size"));
  c.synth_distractors = parse_int("synth_distractors", kv.get("synth_distractors"));
  c.synth_noise = parse_double("synth_noise", kv.get("synth_noise"));
  c.synth_signal_amplitude = parse_double("synth_signal_amplitude", kv.get("synth_signal_amplitude"));
  c.synth_distractor_amplitude = parse_double("synth_distractor_amplitude", kv.get("synth_distractor_amplitude"));
  c.synth_center_signal = parse_bool("synth_center_signal", kv.get("synth_center_signal"));
  auto dd = parse_double_list("synth_diagnosis_dist", kv.get("synth_diagnosis_dist"));
  require(dd.size() == 4, ErrorCode::config,
          "synth_diagnosis_dist: expected 4 probabilities");
  std::copy(dd.begin(), dd.end(), c.synth_diagnosis_dist.begin());
  c.synth_format = kv.get("synth_format");
  require(c.synth_format == "png" || c.synth_format == "ppm",
          ErrorCode::config, "synth_format: must be png or ppm");

  const std::string& strat = kv.get("strategy");
  if (strat == "downsample") c.strategy = Strategy::downsample;
  else if (strat == "single_crop") c.strategy = Strategy::single_crop;
  else if (strat == "multi_crop") c.strategy = Strategy::multi_crop;
  else if (strat == "ordered") c.strategy = Strategy::ordered;
  else throw Error(ErrorCode::config, "strategy: unknown value '" + strat + "'");
  c.input_size = parse_int("input_size", kv.get("input_size"));
  c.n_crops = parse_int("n_crops", kv.get("n_crops"));
  c.p_d = parse_double("p_d", kv.get("p_d"));
  require(c.p_d >= 0.0 && c.p_d < 1.0, ErrorCode::config,
          "p_d: must lie in [0, 1)");
  require(c.p_d == 0.0 || c.strategy == Strategy::ordered, ErrorCode::config,
          "p_d: patch dropout requires strategy = ordered");
  c.single_crop_scale_min = parse_double("single_crop_scale_min", kv.get("single_crop_scale_min"));
  c.single_crop_scale_max = parse_double("single_crop_scale_max", kv.get("single_crop_scale_max"));

  c.backbone_channels = parse_int_list("backbone_channels", kv.get("backbone_channels"));
  require(!c.backbone_channels.empty(), ErrorCode::config,
          "backbone_channels: need at least one stage");
  const std::string& agg = kv.get("aggregator");
  if (agg == "average") c.aggregator = Aggregator::average;
  else if (agg == "gru") c.aggregator = Aggregator::gru;
  else if (agg == "attention") c.aggregator = Aggregator::attention;
  else throw Error(ErrorCode::config, "aggregator: unknown value '" + agg + "'");
  const std::string& place = kv.get("attention_placement");
  if (place == "initial") { c.attention_initial = true; c.attention_end = false; }
  else if (place == "end") { c.attention_initial = false; c.attention_end = true; }
  else if (place == "dual") { c.attention_initial = true; c.attention_end = true; }
  else throw Error(ErrorCode::config,
                   "attention_placement: must be initial, end or dual");
  if (c.aggregator != Aggregator::attention) {
    c.attention_initial = false;
    c.attention_end = false;
  }
  c.gru_hidden = parse_int("gru_hidden", kv.get("gru_hidden"));

  bool crops_strategy = c.strategy == Strategy::multi_crop ||
                        c.strategy == Strategy::ordered;
  require(c.aggregator == Aggregator::average || crops_strategy,
          ErrorCode::config,
          "aggregator = " + agg +
              " requires strategy = multi_crop or ordered (got strategy = " +
              strat + ")");
  if (crops_strategy)
    require(c.n_crops == 5 || c.n_crops == 9 || c.n_crops == 16,
            ErrorCode::config, "n_crops: must be one of {5, 9, 16}");

  const std::string& bal = kv.get("balancing");
  if (bal == "none") c.balancing = BalancingMode::none;
  else if (bal == "oversample") c.balancing = BalancingMode::oversample;
  else if (bal == "balanced_batches") c.balancing = BalancingMode::balanced_batches;
  else if (bal == "loss_weighting") c.balancing = BalancingMode::loss_weighting;
  else if (bal == "diagnosis_weighting") c.balancing = BalancingMode::diagnosis_weighting;
  else throw Error(ErrorCode::config, "balancing: unknown value '" + bal + "'");
  c.k = parse_double("k", kv.get("k"));
  require(c.k >= 0.0, ErrorCode::config, "k: must be >= 0");
  auto dm = parse_double_list("diag_multipliers", kv.get("diag_multipliers"));
  require(dm.size() == 4, ErrorCode::config,
          "diag_multipliers: expected 4 values");
  for (std::size_t i = 0; i + 1 < dm.size(); ++i)
    require(dm[i] <= dm[i + 1], ErrorCode::config,
            "diag_multipliers: must be non-decreasing in cost order");
  for (double m : dm)
    require(m > 0.0, ErrorCode::config, "diag_multipliers: must be positive");
  std::copy(dm.begin(), dm.end(), c.diag_multipliers.begin());
  c.diag_strict = parse_bool("diag_strict", kv.get("diag_strict"));

  c.epochs = parse_int("epochs", kv.get("epochs"));
  require(c.epochs > 0, ErrorCode::config, "epochs: must be positive");
  c.batch_size = parse_int("batch_size", kv.get("batch_size"));
  require(c.batch_size > 0, ErrorCode::config, "batch_size: must be positive");
  require(c.balancing != BalancingMode::balanced_batches ||
              c.batch_size % c.n_classes() == 0,
          ErrorCode::config,
          "balancing = balanced_batches requires batch_size (" +
              kv.get("batch_size") + ") divisible by the class count (" +
              std::to_string(c.n_classes()) + ")");
  c.learning_rate = parse_double("learning_rate", kv.get("learning_rate"));
  c.beta1 = parse_double("beta1", kv.get("beta1"));
  c.beta2 = parse_double("beta2", kv.get("beta2"));
  c.epsilon = parse_double("epsilon", kv.get("epsilon"));
  c.seed = static_cast<std::uint64_t>(parse_int("seed", kv.get("seed")));
  c.augment = parse_bool("augment", kv.get("augment"));
  c.deterministic = parse_bool("deterministic", kv.get("deterministic"));
  c.sweep_seeds = parse_int("sweep_seeds", kv.get("sweep_seeds"));
  require(c.sweep_seeds > 0, ErrorCode::config, "sweep_seeds: must be positive");
  c.out_dir = kv.get("out_dir");
  c.run_id = kv.get("run_id");
  c.overwrite = parse_bool("overwrite", kv.get("overwrite"));
  return c;
}

std::uint64_t model_config_hash(const ExperimentConfig& cfg) {
  std::ostringstream os;
  for (int ch : cfg.backbone_channels) os << ch << ",";
  os << "|" << cfg.input_size << "|" << static_cast<int>(cfg.aggregator) << "|"
     << cfg.attention_initial << cfg.attention_end << "|" << cfg.n_crops << "|"
     << cfg.gru_hidden << "|" << cfg.n_classes();
  return fnv1a64(os.str());
}

ModelSpec model_spec_from(const ExperimentConfig& cfg) {
  ModelSpec spec;
  spec.backbone_channels = cfg.backbone_channels;
  spec.in_channels = 3;
  spec.input_size = cfg.input_size;
  spec.n_classes = cfg.n_classes();
  spec.aggregator = cfg.aggregator;
  spec.attention_initial = cfg.attention_initial;
  spec.attention_end = cfg.attention_end;
  spec.n_crops = (cfg.strategy == Strategy::multi_crop ||
                  cfg.strategy == Strategy::ordered)
                     ? cfg.n_crops
                     : 1;
  spec.gru_hidden = cfg.gru_hidden;
  return spec;
}

}  // namespace pla
