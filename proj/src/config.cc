// Copyright 2026 the tabver authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tabver/config.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "tabver/errors.h"
#include "tabver/text.h"

namespace tabver {
namespace {

const std::vector<ConfigKey>& key_table() {
  static const std::vector<ConfigKey> keys = {
      {"tables", "", "table corpus, JSON Lines"},
      {"train_claims", "", "training claims, JSON Lines"},
      {"dev_claims", "", "development claims for model selection and detector thresholds"},
      {"eval_claims", "", "claims to retrieve for, evaluate or analyse"},
      {"index", "", "index file written by build-index", false},
      {"checkpoint", "", "model checkpoint file", false},
      {"output_dir", "out", "directory for reports and logs", false},
      {"strategy", "entity_char23",
       "retrieval preset: entity_char23, entity_char123, entity_word, entity_exact, "
       "query_word, query_char23"},
      {"gram_orders", "", "override the preset's gram orders, e.g. 2,3"},
      {"k", "3", "tables retrieved per claim"},
      {"hits_ks", "1,3,5,10", "cutoffs for retrieval Hits@k"},
      {"max_rows", "", "row cap for the linearize command (empty: no cap)"},
      {"hash_buckets", "32768", "encoder feature hash buckets"},
      {"embed_dim", "64", "encoder embedding width"},
      {"hidden_dim", "128", "encoder hidden width"},
      {"output_dim", "64", "encoding length n"},
      {"encoder_gram_orders", "2,3", "character gram orders of the encoder features"},
      {"dropout", "0.1", "dropout rate before every MLP layer while training"},
      {"fusion_heads", "2", "cross-table attention heads; must divide output_dim"},
      {"head_hidden", "128", "hidden width of the output head MLP"},
      {"attention", "true", "use cross-table attention"},
      {"head", "joint", "output head: joint, ternary or binary_uniform"},
      {"scale", "desk", "optimizer preset: desk (1e-3, 100, 16) or large (5e-6, 30000, 32)"},
      {"learning_rate", "", "peak learning rate (empty: from scale)"},
      {"warmup_batches", "", "linear warmup steps (empty: from scale)"},
      {"batch_size", "", "claims per step (empty: from scale)"},
      {"epochs", "50", "training epochs"},
      {"seed", "0", "seed for initialization, shuffling and dropout"},
      {"beta1", "0.9", "Adam first-moment decay"},
      {"beta2", "0.999", "Adam second-moment decay"},
      {"epsilon", "1e-8", "Adam epsilon"},
      {"evidence", "retrieved", "evaluation evidence: retrieved or oracle"},
      {"detector_method", "auto",
       "ternary, entropy, or auto (ternary for a ternary checkpoint, else entropy)"},
      {"positive_class", "present", "detector positive class: present or absent"},
      {"synthetic_tables", "20", "tables in the synthetic world"},
      {"synthetic_group_size", "3", "tables sharing one player"},
      {"synthetic_train", "200", "synthetic training claims"},
      {"synthetic_test", "100", "synthetic held-out claims"},
      {"synthetic_filler_rows", "2", "filler rows per synthetic table"},
      {"synthetic_seed", "7", "seed of the synthetic world"},
      {"threads", "0", "worker threads, 0 for all cores", false},
      {"force", "false", "evaluate even when the checkpoint's index config differs", false},
  };
  return keys;
}

const ConfigKey* find_key(std::string_view name) {
  for (const ConfigKey& k : key_table()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(std::string_view key, const std::string& value) {
  T out{};
  const char* begin = value.data();
  const char* end = begin + value.size();
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + value + "'");
  }
  return out;
}

}  // namespace

std::span<const ConfigKey> config_keys() { return key_table(); }

RunConfig::RunConfig() {
  for (const ConfigKey& k : key_table()) values_[k.name] = k.default_value;
}

void RunConfig::set(std::string_view key, std::string value) {
  if (!find_key(key)) throw ConfigError("unknown config key '" + std::string(key) + "'");
  values_[std::string(key)] = trim(value);
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path.string());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(number) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (!find_key(key)) {
      throw ConfigError(path.string() + ":" + std::to_string(number) +
                        ": unknown config key '" + key + "'");
    }
    values_[key] = trim(std::string_view(body).substr(eq + 1));
  }
}

void RunConfig::apply_env(const std::function<const char*(const char*)>& lookup) {
  for (const ConfigKey& k : key_table()) {
    std::string name(kEnvPrefix);
    for (char c : k.name) name.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    const char* v = lookup ? lookup(name.c_str()) : std::getenv(name.c_str());
    if (v) values_[k.name] = trim(v);
  }
}

const std::string& RunConfig::get(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  return it->second;
}

std::optional<std::filesystem::path> RunConfig::path(std::string_view key) const {
  const std::string& v = get(key);
  if (v.empty()) return std::nullopt;
  return std::filesystem::path(v);
}

std::filesystem::path RunConfig::existing_path(std::string_view key) const {
  const auto p = path(key);
  if (!p) throw InputError("missing required input '" + std::string(key) + "'");
  if (!std::filesystem::exists(*p)) {
    throw InputError("input '" + std::string(key) + "' does not exist: " + p->string());
  }
  return *p;
}

double RunConfig::get_double(std::string_view key) const {
  return parse_number<double>(key, get(key));
}

std::uint64_t RunConfig::get_u64(std::string_view key) const {
  return parse_number<std::uint64_t>(key, get(key));
}

std::size_t RunConfig::get_size(std::string_view key) const {
  return parse_number<std::size_t>(key, get(key));
}

bool RunConfig::get_bool(std::string_view key) const {
  std::string v = get(key);
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + std::string(key) + "': expected a boolean, got '" + v + "'");
}

std::vector<int> RunConfig::get_int_list(std::string_view key) const {
  std::vector<int> out;
  const std::string& v = get(key);
  std::size_t start = 0;
  while (start <= v.size()) {
    const std::size_t comma = std::min(v.find(',', start), v.size());
    const std::string item = trim(std::string_view(v).substr(start, comma - start));
    if (item.empty()) throw ConfigError("config key '" + std::string(key) + "': empty list item");
    out.push_back(parse_number<int>(key, item));
    start = comma + 1;
  }
  return out;
}

IndexConfig RunConfig::index_config() const {
  std::optional<IndexConfig> c = strategy_preset(get("strategy"));
  if (!c) throw ConfigError("unknown retrieval strategy '" + get("strategy") + "'");
  if (is_set("gram_orders")) c->gram_orders = get_int_list("gram_orders");
  c->validate();
  return *c;
}

ModelConfig RunConfig::model_config() const {
  ModelConfig m;
  m.encoder.hash_buckets = get_size("hash_buckets");
  m.encoder.embed_dim = get_size("embed_dim");
  m.encoder.hidden_dim = get_size("hidden_dim");
  m.encoder.output_dim = get_size("output_dim");
  m.encoder.gram_orders = get_int_list("encoder_gram_orders");
  m.encoder.dropout = get_double("dropout");
  m.fusion_heads = get_size("fusion_heads");
  m.head_hidden = get_size("head_hidden");
  m.use_attention = get_bool("attention");
  m.head = head_kind_from_string(get("head"));
  m.validate();
  return m;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  if (get("scale") == "large") {
    t = TrainConfig::large_scale();
  } else if (get("scale") != "desk") {
    throw ConfigError("scale must be desk or large, got '" + get("scale") + "'");
  }
  if (is_set("learning_rate")) t.learning_rate = get_double("learning_rate");
  if (is_set("warmup_batches")) t.warmup_batches = get_size("warmup_batches");
  if (is_set("batch_size")) t.batch_size = get_size("batch_size");
  t.epochs = get_size("epochs");
  t.seed = get_u64("seed");
  t.k = get_size("k");
  t.beta1 = get_double("beta1");
  t.beta2 = get_double("beta2");
  t.epsilon = get_double("epsilon");
  t.threads = static_cast<unsigned>(get_size("threads"));
  t.validate();
  return t;
}

SyntheticConfig RunConfig::synthetic_config() const {
  SyntheticConfig s;
  s.num_tables = get_size("synthetic_tables");
  s.group_size = get_size("synthetic_group_size");
  s.train_claims = get_size("synthetic_train");
  s.test_claims = get_size("synthetic_test");
  s.filler_rows = get_size("synthetic_filler_rows");
  s.seed = get_u64("synthetic_seed");
  return s;
}

std::vector<std::size_t> RunConfig::hits_ks() const {
  std::vector<std::size_t> out;
  for (int k : get_int_list("hits_ks")) {
    if (k <= 0) throw ConfigError("hits_ks entries must be positive");
    out.push_back(static_cast<std::size_t>(k));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void RunConfig::validate() const {
  index_config();
  model_config();
  train_config();
  hits_ks();
  if (get_size("k") == 0) throw ConfigError("k must be at least 1");
  get_bool("force");
  get_size("threads");
  if (is_set("max_rows")) get_size("max_rows");
  const std::string& evidence = get("evidence");
  if (evidence != "retrieved" && evidence != "oracle") {
    throw ConfigError("evidence must be retrieved or oracle");
  }
  const std::string& method = get("detector_method");
  if (method != "auto") suitability_method_from_string(method);
  const std::string& pc = get("positive_class");
  if (pc != "present" && pc != "absent") {
    throw ConfigError("positive_class must be present or absent");
  }
}

std::string RunConfig::hash() const {
  std::string canonical;
  for (const ConfigKey& k : key_table()) {
    if (!k.hashed) continue;
    canonical += k.name;
    canonical += '=';
    canonical += get(k.name);
    canonical += '\n';
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(gram_hash(canonical)));
  return buf;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const ConfigKey& k : key_table()) j[k.name] = get(k.name);
  return j;
}

std::string describe_config_keys() {
  std::string out = "Configuration keys (file 'key = value', env TABVER_<KEY>, or --set key=value):\n";
  for (const ConfigKey& k : key_table()) {
    out += "  " + k.name;
    out += std::string(k.name.size() < 22 ? 22 - k.name.size() : 1, ' ');
    out += k.help;
    if (!k.default_value.empty()) out += " [" + k.default_value + "]";
    out += "\n";
  }
  return out;
}

}  // namespace tabver
