// config.cc

// Copyright 2026  The domexp Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "domexp/config.h"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "domexp/errors.h"

namespace domexp {

namespace pt = boost::property_tree;

ExpansionConfig default_config() {
  ExpansionConfig c;
  c.original_domain.name = "original";
  c.original_domain.num_classes = 8;
  c.original_domain.feature_dim = 20;
  c.original_domain.samples_per_class = 75;
  c.original_domain.class_center_scale = 1.0;
  c.original_domain.noise_std = 1.0;
  c.original_domain.domain_shift = 0.0;
  c.new_domain = c.original_domain;
  c.new_domain.name = "new";
  c.new_domain.domain_shift = 1.0;
  c.new_domain.offset_scale = 5.0;

  c.hidden_dims = {64, 64};
  c.original_train = TrainConfig::original_defaults();
  c.expansion_train = TrainConfig::expansion_defaults();
  c.expansion_train.batch_size = 8;
  c.methods = {Method::kFineTune, Method::kWca, Method::kEwc, Method::kSkld,
               Method::kSkldEwc};
  c.grid.lambda_w = {1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0};
  c.grid.lambda_e = c.grid.lambda_w;
  c.grid.lambda_s = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  c.grid.temperature = {1.0, 2.0};
  return c;
}

void ExpansionConfig::validate() const {
  if (methods.empty()) throw ConfigError("config: at least one method is required");
  try {
    original_train.validate();
    expansion_train.validate();
  } catch (const ConfigError &e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (source == Source::kSynthetic) {
    try {
      original_domain.validate();
      new_domain.validate();
    } catch (const InvalidArgument &e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    if (original_domain.num_classes != new_domain.num_classes ||
        original_domain.feature_dim != new_domain.feature_dim)
      throw ConfigError("config: original and new domains must share num_classes "
                        "and feature_dim");
    if (original_domain.name == new_domain.name)
      throw ConfigError("config: the two domains need distinct names");
  } else {
    for (const auto *p : {&files.original_train, &files.original_dev, &files.original_eval,
                          &files.new_train, &files.new_dev, &files.new_eval})
      if (p->empty()) throw ConfigError("config: source = files needs all six file paths");
  }
  for (std::size_t h : hidden_dims)
    if (h == 0) throw ConfigError("config: hidden layer width must be >= 1");
  for (Method m : methods) {
    const bool empty =
        (m == Method::kWca && grid.lambda_w.empty()) ||
        (m == Method::kEwc && grid.lambda_e.empty()) ||
        (m == Method::kSkld && (grid.lambda_s.empty() || grid.temperature.empty())) ||
        (m == Method::kSkldEwc &&
         (grid.lambda_s.empty() || grid.lambda_e.empty() || grid.temperature.empty()));
    if (empty)
      throw ConfigError("config: empty grid for method " + std::string(method_name(m)));
  }
  for (double v : grid.lambda_w)
    if (!(v >= 0.0)) throw ConfigError("config: lambda_w values must be >= 0");
  for (double v : grid.lambda_e)
    if (!(v >= 0.0)) throw ConfigError("config: lambda_e values must be >= 0");
  for (double v : grid.lambda_s)
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("config: lambda_s values must be in [0,1]");
  for (double v : grid.temperature)
    if (!(v > 0.0)) throw ConfigError("config: temperatures must be > 0");
  if (!(fisher_offset >= 0.0)) throw ConfigError("config: fisher_offset must be >= 0");
  if (forgetting_lambda_s && !(*forgetting_lambda_s >= 0.0 && *forgetting_lambda_s <= 1.0))
    throw ConfigError("config: forgetting lambda_s must be in [0,1]");
  if (forgetting_temperature && !(*forgetting_temperature > 0.0))
    throw ConfigError("config: forgetting temperature must be > 0");
}

namespace {

std::string trimmed(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split_list(const std::string &value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::string t = trimmed(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

double to_double(const std::string &key, const std::string &text) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size() || !std::isfinite(v))
    throw ConfigError("config: " + key + ": '" + text + "' is not a number");
  return v;
}

std::uint64_t to_u64(const std::string &key, const std::string &text) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size())
    throw ConfigError("config: " + key + ": '" + text + "' is not a non-negative integer");
  return v;
}

bool to_bool(const std::string &key, const std::string &text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("config: " + key + ": '" + text + "' is not a boolean");
}

std::vector<double> to_doubles(const std::string &key, const std::string &text) {
  std::vector<double> out;
  for (const std::string &s : split_list(text)) out.push_back(to_double(key, s));
  return out;
}

using Setter = std::function<void(ExpansionConfig &, const std::string &)>;
using SectionSetters = std::map<std::string, Setter>;

SectionSetters domain_setters(DomainSpec ExpansionConfig::*member) {
  return {
      {"name", [=](ExpansionConfig &c, const std::string &v) { (c.*member).name = v; }},
      {"num_classes",
       [=](ExpansionConfig &c, const std::string &v) {
         (c.*member).num_classes = to_u64("num_classes", v);
       }},
      {"feature_dim",
       [=](ExpansionConfig &c, const std::string &v) {
         (c.*member).feature_dim = to_u64("feature_dim", v);
       }},
      {"samples_per_class",
       [=](ExpansionConfig &c, const std::string &v) {
         (c.*member).samples_per_class = to_u64("samples_per_class", v);
       }},
      {"class_center_scale",
       [=](ExpansionConfig &c, const std::string &v) {
         (c.*member).class_center_scale = to_double("class_center_scale", v);
       }},
      {"domain_shift",
       [=](ExpansionConfig &c, const std::string &v) {
         (c.*member).domain_shift = to_double("domain_shift", v);
       }},
      {"offset_scale",
       [=](ExpansionConfig &c, const std::string &v) {
         (c.*member).offset_scale = to_double("offset_scale", v);
       }},
      {"rotation_scale",
       [=](ExpansionConfig &c, const std::string &v) {
         (c.*member).rotation_scale = to_double("rotation_scale", v);
       }},
      {"noise_std",
       [=](ExpansionConfig &c, const std::string &v) {
         (c.*member).noise_std = to_double("noise_std", v);
       }},
  };
}

SectionSetters train_setters(TrainConfig ExpansionConfig::*member, bool original) {
  SectionSetters s = {
      {"learning_rate",
       [=](ExpansionConfig &c, const std::string &v) {
         (c.*member).learning_rate = to_double("learning_rate", v);
       }},
      {"batch_size",
       [=](ExpansionConfig &c, const std::string &v) {
         (c.*member).batch_size = to_u64("batch_size", v);
       }},
  };
  if (original) {
    s["max_epochs"] = [=](ExpansionConfig &c, const std::string &v) {
      (c.*member).max_epochs = to_u64("max_epochs", v);
    };
    s["early_stop_patience"] = [=](ExpansionConfig &c, const std::string &v) {
      (c.*member).early_stop_patience = to_u64("early_stop_patience", v);
    };
  } else {
    s["fixed_epochs"] = [=](ExpansionConfig &c, const std::string &v) {
      (c.*member).fixed_epochs = to_u64("fixed_epochs", v);
    };
  }
  return s;
}

const std::map<std::string, SectionSetters> &schema() {
  static const std::map<std::string, SectionSetters> s = [] {
    std::map<std::string, SectionSetters> m;
    m[""] = {
        {"seed", [](ExpansionConfig &c, const std::string &v) { c.seed = to_u64("seed", v); }},
        {"output_dir", [](ExpansionConfig &c, const std::string &v) { c.output_dir = v; }},
        {"methods",
         [](ExpansionConfig &c, const std::string &v) {
           c.methods.clear();
           for (const std::string &name : split_list(v)) c.methods.push_back(parse_method(name));
         }},
    };
    m["data"] = {
        {"source",
         [](ExpansionConfig &c, const std::string &v) {
           if (v == "synthetic")
             c.source = ExpansionConfig::Source::kSynthetic;
           else if (v == "files")
             c.source = ExpansionConfig::Source::kFiles;
           else
             throw ConfigError("config: data.source must be 'synthetic' or 'files'");
         }},
        {"split",
         [](ExpansionConfig &c, const std::string &v) {
           const std::vector<double> f = to_doubles("data.split", v);
           if (f.size() != 3) throw ConfigError("config: data.split needs three fractions");
           c.split = {f[0], f[1], f[2]};
         }},
    };
    m["domain.original"] = domain_setters(&ExpansionConfig::original_domain);
    m["domain.new"] = domain_setters(&ExpansionConfig::new_domain);
    auto path_setter = [](std::filesystem::path FileSources::*p) {
      return [=](ExpansionConfig &c, const std::string &v) { c.files.*p = v; };
    };
    m["files"] = {
        {"original_train", path_setter(&FileSources::original_train)},
        {"original_dev", path_setter(&FileSources::original_dev)},
        {"original_eval", path_setter(&FileSources::original_eval)},
        {"new_train", path_setter(&FileSources::new_train)},
        {"new_dev", path_setter(&FileSources::new_dev)},
        {"new_eval", path_setter(&FileSources::new_eval)},
        {"stack_context",
         [](ExpansionConfig &c, const std::string &v) {
           c.files.stack_context = to_u64("files.stack_context", v);
         }},
        {"num_classes",
         [](ExpansionConfig &c, const std::string &v) {
           c.files.num_classes = to_u64("files.num_classes", v);
         }},
    };
    m["net"] = {
        {"hidden_dims",
         [](ExpansionConfig &c, const std::string &v) {
           c.hidden_dims.clear();
           for (const std::string &s : split_list(v))
             c.hidden_dims.push_back(to_u64("net.hidden_dims", s));
         }},
    };
    m["train.original"] = train_setters(&ExpansionConfig::original_train, true);
    m["train.expansion"] = train_setters(&ExpansionConfig::expansion_train, false);
    m["grid"] = {
        {"lambda_w",
         [](ExpansionConfig &c, const std::string &v) {
           c.grid.lambda_w = to_doubles("grid.lambda_w", v);
         }},
        {"lambda_e",
         [](ExpansionConfig &c, const std::string &v) {
           c.grid.lambda_e = to_doubles("grid.lambda_e", v);
         }},
        {"lambda_s",
         [](ExpansionConfig &c, const std::string &v) {
           c.grid.lambda_s = to_doubles("grid.lambda_s", v);
         }},
        {"temperature",
         [](ExpansionConfig &c, const std::string &v) {
           c.grid.temperature = to_doubles("grid.temperature", v);
         }},
    };
    m["regularizers"] = {
        {"fisher_offset",
         [](ExpansionConfig &c, const std::string &v) {
           c.fisher_offset = to_double("regularizers.fisher_offset", v);
         }},
        {"distill_t_squared",
         [](ExpansionConfig &c, const std::string &v) {
           c.distill_t_squared = to_bool("regularizers.distill_t_squared", v);
         }},
    };
    m["forgetting"] = {
        {"lambda_s",
         [](ExpansionConfig &c, const std::string &v) {
           c.forgetting_lambda_s = to_double("forgetting.lambda_s", v);
         }},
        {"temperature",
         [](ExpansionConfig &c, const std::string &v) {
           c.forgetting_temperature = to_double("forgetting.temperature", v);
         }},
    };
    return m;
  }();
  return s;
}

void apply(ExpansionConfig &c, const std::string &section, const std::string &key,
           const std::string &value) {
  const auto &sch = schema();
  auto sec = sch.find(section);
  if (sec == sch.end()) throw ConfigError("config: unknown section [" + section + "]");
  auto it = sec->second.find(key);
  if (it == sec->second.end()) {
    const std::string where = section.empty() ? key : section + "." + key;
    throw ConfigError("config: unknown key '" + where + "'");
  }
  it->second(c, trimmed(value));
}

}  // namespace

ExpansionConfig parse_config(std::istream &in) {
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error &e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExpansionConfig c = default_config();
  for (const auto &[name, node] : tree) {
    if (node.empty()) {
      apply(c, "", name, node.data());
      continue;
    }
    for (const auto &[key, leaf] : node) {
      if (!leaf.empty()) throw ConfigError("config: nesting too deep at " + name + "." + key);
      apply(c, name, key, leaf.data());
    }
  }
  c.validate();
  return c;
}

ExpansionConfig load_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  return parse_config(in);
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string nums(const std::vector<double> &v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
  return s;
}

void put_domain(std::map<std::string, std::string> &kv, const std::string &prefix,
                const DomainSpec &d) {
  kv[prefix + "name"] = d.name;
  kv[prefix + "num_classes"] = std::to_string(d.num_classes);
  kv[prefix + "feature_dim"] = std::to_string(d.feature_dim);
  kv[prefix + "samples_per_class"] = std::to_string(d.samples_per_class);
  kv[prefix + "class_center_scale"] = num(d.class_center_scale);
  kv[prefix + "domain_shift"] = num(d.domain_shift);
  kv[prefix + "offset_scale"] = num(d.offset_scale);
  kv[prefix + "rotation_scale"] = num(d.rotation_scale);
  kv[prefix + "noise_std"] = num(d.noise_std);
}

}  // namespace

std::string canonical_config(const ExpansionConfig &c) {
  std::map<std::string, std::string> kv;
  std::string methods;
  for (std::size_t i = 0; i < c.methods.size(); ++i)
    methods += (i ? "," : "") + std::string(method_name(c.methods[i]));
  kv["methods"] = methods;
  kv["data.source"] = c.source == ExpansionConfig::Source::kSynthetic ? "synthetic" : "files";
  kv["data.split"] = nums({c.split.train, c.split.dev, c.split.eval});
  if (c.source == ExpansionConfig::Source::kSynthetic) {
    put_domain(kv, "domain.original.", c.original_domain);
    put_domain(kv, "domain.new.", c.new_domain);
  } else {
    kv["files.original_train"] = c.files.original_train.string();
    kv["files.original_dev"] = c.files.original_dev.string();
    kv["files.original_eval"] = c.files.original_eval.string();
    kv["files.new_train"] = c.files.new_train.string();
    kv["files.new_dev"] = c.files.new_dev.string();
    kv["files.new_eval"] = c.files.new_eval.string();
    kv["files.stack_context"] =
        c.files.stack_context ? std::to_string(*c.files.stack_context) : "none";
    kv["files.num_classes"] =
        c.files.num_classes ? std::to_string(*c.files.num_classes) : "auto";
  }
  std::string hidden;
  for (std::size_t i = 0; i < c.hidden_dims.size(); ++i)
    hidden += (i ? "," : "") + std::to_string(c.hidden_dims[i]);
  kv["net.hidden_dims"] = hidden;
  kv["train.original.learning_rate"] = num(c.original_train.learning_rate);
  kv["train.original.batch_size"] = std::to_string(c.original_train.batch_size);
  kv["train.original.max_epochs"] = std::to_string(c.original_train.max_epochs);
  kv["train.original.early_stop_patience"] =
      std::to_string(c.original_train.early_stop_patience);
  kv["train.expansion.learning_rate"] = num(c.expansion_train.learning_rate);
  kv["train.expansion.batch_size"] = std::to_string(c.expansion_train.batch_size);
  kv["train.expansion.fixed_epochs"] = std::to_string(c.expansion_train.fixed_epochs);
  kv["grid.lambda_w"] = nums(c.grid.lambda_w);
  kv["grid.lambda_e"] = nums(c.grid.lambda_e);
  kv["grid.lambda_s"] = nums(c.grid.lambda_s);
  kv["grid.temperature"] = nums(c.grid.temperature);
  kv["regularizers.fisher_offset"] = num(c.fisher_offset);
  kv["regularizers.distill_t_squared"] = c.distill_t_squared ? "true" : "false";
  kv["forgetting.lambda_s"] = c.forgetting_lambda_s ? num(*c.forgetting_lambda_s) : "tuned";
  kv["forgetting.temperature"] =
      c.forgetting_temperature ? num(*c.forgetting_temperature) : "tuned";

  std::string out;
  for (const auto &[k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::filesystem::path run_directory(const ExpansionConfig &config) {
  char name[64];
  std::snprintf(name, sizeof name, "run-%016llx-s%llu",
                static_cast<unsigned long long>(fnv1a64(canonical_config(config))),
                static_cast<unsigned long long>(config.seed));
  return config.output_dir / name;
}

}  // namespace domexp
