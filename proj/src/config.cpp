/* Copyright 2026 The gshard Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "gshard/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>
#include <string_view>
#include <type_traits>

namespace gshard {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("'" + v + "' is not a valid number");
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + v + "' is not a boolean");
}

std::string join(const std::vector<std::string>& xs, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? sep : "") + xs[i];
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"algorithm", [](RunConfig& c, const std::string& v) { c.train.algorithm = parse_algorithm(v); }},
      {"batch_size", [](RunConfig& c, const std::string& v) { c.train.batch_size = parse_number<std::size_t>(v); }},
      {"epochs", [](RunConfig& c, const std::string& v) { c.train.epochs = parse_number<std::size_t>(v); }},
      {"walk_len", [](RunConfig& c, const std::string& v) { c.train.walk_len = parse_number<std::size_t>(v); }},
      {"window", [](RunConfig& c, const std::string& v) { c.train.window = parse_number<std::size_t>(v); }},
      {"num_neg", [](RunConfig& c, const std::string& v) { c.train.num_neg = parse_number<std::size_t>(v); }},
      {"dim", [](RunConfig& c, const std::string& v) { c.train.dim = parse_number<std::size_t>(v); }},
      {"lr", [](RunConfig& c, const std::string& v) { c.train.lr = parse_number<double>(v); }},
      {"momentum", [](RunConfig& c, const std::string& v) { c.train.momentum = parse_number<double>(v); }},
      {"optimizer", [](RunConfig& c, const std::string& v) { c.train.optimizer = parse_optimizer(v); }},
      {"beta1", [](RunConfig& c, const std::string& v) { c.train.beta1 = parse_number<double>(v); }},
      {"beta2", [](RunConfig& c, const std::string& v) { c.train.beta2 = parse_number<double>(v); }},
      {"eps", [](RunConfig& c, const std::string& v) { c.train.eps = parse_number<double>(v); }},
      {"num_trainers", [](RunConfig& c, const std::string& v) { c.train.num_trainers = parse_number<std::size_t>(v); }},
      {"num_shards", [](RunConfig& c, const std::string& v) { c.train.num_shards = parse_number<std::size_t>(v); }},
      {"mode", [](RunConfig& c, const std::string& v) { c.train.mode = parse_mode(v); }},
      {"update_mode", [](RunConfig& c, const std::string& v) { c.train.update = parse_update_mode(v); }},
      {"seed", [](RunConfig& c, const std::string& v) { c.train.seed = parse_number<std::uint64_t>(v); }},
      {"dtype", [](RunConfig& c, const std::string& v) { c.train.dtype = parse_dtype(v); }},
      {"partition", [](RunConfig& c, const std::string& v) { c.train.partition = parse_partition_scheme(v); }},
      {"shard_scheme", [](RunConfig& c, const std::string& v) { c.train.shard_scheme = parse_shard_scheme(v); }},
      {"separate_context", [](RunConfig& c, const std::string& v) { c.train.separate_context = parse_bool(v); }},
      {"neg_exponent", [](RunConfig& c, const std::string& v) { c.train.neg_exponent = parse_number<double>(v); }},
      {"init_scale", [](RunConfig& c, const std::string& v) { c.train.init_scale = parse_number<double>(v); }},
      {"graph", [](RunConfig& c, const std::string& v) { c.graph = v; }},
      {"generate", [](RunConfig& c, const std::string& v) { c.generate = v; }},
      {"nodes", [](RunConfig& c, const std::string& v) { c.fixture.nodes = parse_number<std::size_t>(v); }},
      {"blocks", [](RunConfig& c, const std::string& v) { c.fixture.blocks = parse_number<std::size_t>(v); }},
      {"p_in", [](RunConfig& c, const std::string& v) { c.fixture.p_in = parse_number<double>(v); }},
      {"p_out", [](RunConfig& c, const std::string& v) { c.fixture.p_out = parse_number<double>(v); }},
      {"attach", [](RunConfig& c, const std::string& v) { c.fixture.m = parse_number<std::size_t>(v); }},
      {"degree", [](RunConfig& c, const std::string& v) { c.fixture.degree = parse_number<std::size_t>(v); }},
      {"directed", [](RunConfig& c, const std::string& v) { c.fixture.directed = parse_bool(v); }},
      {"out", [](RunConfig& c, const std::string& v) { c.out = v; }},
      {"transport", [](RunConfig& c, const std::string& v) { c.transport = rt::parse_transport(v); }},
      {"listen_addr", [](RunConfig& c, const std::string& v) {
         rt::parse_address(v);
         c.listen_addr = v;
       }},
      {"shard_addrs", [](RunConfig& c, const std::string& v) {
         c.shard_addrs = split(v, ',');
         for (const auto& a : c.shard_addrs) rt::parse_address(a);
       }},
      {"request_timeout_ms", [](RunConfig& c, const std::string& v) {
         c.request_timeout = std::chrono::milliseconds(parse_number<std::int64_t>(v));
       }},
      {"barrier_timeout_ms", [](RunConfig& c, const std::string& v) {
         c.barrier_timeout = std::chrono::milliseconds(parse_number<std::int64_t>(v));
       }},
      {"fanout", [](RunConfig& c, const std::string& v) {
         c.fanouts.clear();
         for (const auto& f : split(v, ';')) c.fanouts.push_back(FanoutSpec::parse(f));
         if (c.fanouts.empty()) throw ConfigError("fanout is empty");
       }},
      {"bench_trainers", [](RunConfig& c, const std::string& v) {
         c.bench_trainers.clear();
         for (const auto& x : split(v, ',')) c.bench_trainers.push_back(parse_number<std::size_t>(x));
         if (c.bench_trainers.empty()) throw ConfigError("bench_trainers is empty");
       }},
      {"trials", [](RunConfig& c, const std::string& v) { c.trials = parse_number<std::size_t>(v); }},
      {"feature_dim", [](RunConfig& c, const std::string& v) { c.feature_dim = parse_number<std::size_t>(v); }},
      {"strategies", [](RunConfig& c, const std::string& v) {
         c.strategies.clear();
         for (const auto& x : split(v, ',')) c.strategies.push_back(parse_fetch_strategy(x));
         if (c.strategies.empty()) throw ConfigError("strategies is empty");
       }},
      {"smoothing_window", [](RunConfig& c, const std::string& v) {
         c.smoothing_window = parse_number<std::size_t>(v);
       }},
  };
  return table;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", n);
    auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", n);
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, _] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

void RunConfig::apply(const std::map<std::string, std::string>& kv) {
  std::vector<std::string> errs;
  const auto& table = setters();
  for (const auto& [key, value] : kv) {
    auto it = table.find(key);
    if (it == table.end()) {
      errs.push_back("unknown key '" + key + "'");
      continue;
    }
    try {
      it->second(*this, value);
    } catch (const Error& e) {
      errs.push_back(key + ": " + e.what());
    }
  }
  try {
    train.validate();
  } catch (const ConfigError& e) {
    std::istringstream is(e.what());
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) errs.push_back(trim(line));
  }
  if (smoothing_window == 0) errs.push_back("smoothing_window must be >= 1");
  if (trials == 0) errs.push_back("trials must be >= 1");
  if (feature_dim == 0) errs.push_back("feature_dim must be >= 1");
  for (auto t : bench_trainers) {
    if (t == 0) errs.push_back("bench_trainers entries must be >= 1");
  }
  if (!shard_addrs.empty() && transport != rt::Transport::kTcp) {
    errs.push_back("shard_addrs requires transport = tcp");
  }
  if (!errs.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errs) msg += "\n  " + e;
    throw ConfigError(msg);
  }
}

std::string RunConfig::manifest() const {
  std::ostringstream os;
  auto kv = [&](const std::string& k, const auto& v) {
    os << k << " = ";
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(v)>>) {
      char buf[32];
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
      os << std::string_view(buf, static_cast<std::size_t>(end - buf));
    } else {
      os << v;
    }
    os << "\n";
  };
  const auto& t = train;
  kv("algorithm", algorithm_name(t.algorithm));
  kv("batch_size", t.batch_size);
  kv("epochs", t.epochs);
  kv("walk_len", t.walk_len);
  kv("window", t.window);
  kv("num_neg", t.num_neg);
  kv("dim", t.dim);
  kv("lr", t.resolved_lr());
  kv("momentum", t.momentum);
  kv("optimizer", optimizer_name(t.optimizer));
  kv("beta1", t.beta1);
  kv("beta2", t.beta2);
  kv("eps", t.eps);
  kv("num_trainers", t.num_trainers);
  kv("num_shards", t.num_shards);
  kv("mode", mode_name(t.mode));
  kv("update_mode", update_mode_name(t.update));
  kv("seed", t.seed);
  kv("dtype", dtype_name(t.dtype));
  kv("partition", partition_scheme_name(t.partition));
  kv("shard_scheme", shard_scheme_name(t.shard_scheme));
  kv("separate_context", t.separate_context ? "true" : "false");
  kv("neg_exponent", t.neg_exponent);
  kv("init_scale", t.init_scale);
  if (!graph.empty()) kv("graph", graph);
  if (!generate.empty()) {
    kv("generate", generate);
    kv("nodes", fixture.nodes);
    kv("blocks", fixture.blocks);
    kv("p_in", fixture.p_in);
    kv("p_out", fixture.p_out);
    kv("attach", fixture.m);
    kv("degree", fixture.degree);
  }
  kv("directed", fixture.directed ? "true" : "false");
  kv("out", out);
  kv("transport", rt::transport_name(transport));
  kv("listen_addr", listen_addr);
  if (!shard_addrs.empty()) kv("shard_addrs", join(shard_addrs, ","));
  kv("request_timeout_ms", request_timeout.count());
  kv("barrier_timeout_ms", barrier_timeout.count());
  std::vector<std::string> fs;
  for (const auto& f : fanouts) fs.push_back(f.to_string());
  kv("fanout", join(fs, ";"));
  std::vector<std::string> bt;
  for (auto x : bench_trainers) bt.push_back(std::to_string(x));
  kv("bench_trainers", join(bt, ","));
  kv("trials", trials);
  kv("feature_dim", feature_dim);
  std::vector<std::string> ss;
  for (auto s : strategies) ss.push_back(fetch_strategy_name(s));
  kv("strategies", join(ss, ","));
  kv("smoothing_window", smoothing_window);
  return os.str();
}

rt::ClusterOptions RunConfig::cluster_options(std::size_t trainers, std::size_t shards) const {
  rt::ClusterOptions o;
  o.num_trainers = trainers;
  o.num_shards = shards;
  o.transport = transport;
  o.listen_addr = listen_addr;
  o.shard_addrs = shard_addrs;
  o.request_timeout = request_timeout;
  o.barrier_timeout = barrier_timeout;
  return o;
}

}  // namespace gshard
