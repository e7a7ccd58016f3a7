// datagen.cc

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

#include "domexp/datagen.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "domexp/errors.h"

namespace domexp {

void Dataset::validate() const {
  if (labels.empty()) throw InvalidArgument("dataset '" + domain_tag + "' is empty");
  if (features.rows() != labels.size())
    throw InvalidArgument("dataset '" + domain_tag + "' has " +
                          std::to_string(features.rows()) + " rows but " +
                          std::to_string(labels.size()) + " labels");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes)
      throw InvalidArgument("dataset '" + domain_tag + "': label " + std::to_string(y) +
                            " outside [0, " + std::to_string(num_classes) + ")");
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.features = Matrix(indices.size(), features.cols());
  out.labels.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::span<const double> src = features.row(indices[i]);
    std::copy(src.begin(), src.end(), out.features.row(i).begin());
    out.labels.push_back(labels[indices[i]]);
  }
  out.num_classes = num_classes;
  out.domain_tag = domain_tag;
  return out;
}

void DomainSpec::validate() const {
  if (num_classes == 0 || feature_dim == 0 || samples_per_class == 0)
    throw InvalidArgument("domain '" + name + "': counts must be >= 1");
  if (!(class_center_scale > 0.0))
    throw InvalidArgument("domain '" + name + "': class_center_scale must be > 0");
  if (!(domain_shift >= 0.0) || !(offset_scale >= 0.0) || !(rotation_scale >= 0.0))
    throw InvalidArgument("domain '" + name + "': shift parameters must be >= 0");
  if (!(noise_std >= 0.0))
    throw InvalidArgument("domain '" + name + "': noise_std must be >= 0");
}

Dataset generate_domain(const DomainSpec &spec) {
  spec.validate();
  const std::size_t c_count = spec.num_classes;
  const std::size_t d = spec.feature_dim;
  const Rng base(spec.seed);

  Rng layout_rng = base.split("layout");
  Matrix means(c_count, d);
  for (double &v : means.data()) v = spec.class_center_scale * layout_rng.normal();

  Rng offset_rng = base.split("offset");
  std::vector<double> direction(d);
  double norm = 0.0;
  for (double &v : direction) {
    v = offset_rng.normal();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (double &v : direction) v /= norm;

  Rng rotation_rng = base.split("rotation");
  std::vector<std::size_t> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rotation_rng.engine());
  std::vector<double> signs(d / 2);
  for (double &s : signs) s = rotation_rng.uniform() < 0.5 ? -1.0 : 1.0;

  const double angle = spec.domain_shift * spec.rotation_scale;
  const double offset = spec.domain_shift * spec.offset_scale;
  for (std::size_t c = 0; c < c_count; ++c) {
    std::span<double> mu = means.row(c);
    if (angle != 0.0) {
      for (std::size_t k = 0; k + 1 < d; k += 2) {
        const double a = angle * signs[k / 2];
        const double x = mu[perm[k]], y = mu[perm[k + 1]];
        mu[perm[k]] = std::cos(a) * x - std::sin(a) * y;
        mu[perm[k + 1]] = std::sin(a) * x + std::cos(a) * y;
      }
    }
    for (std::size_t j = 0; j < d; ++j) mu[j] += offset * direction[j];
  }

  Rng sample_rng = base.split("samples:" + spec.name);
  Dataset out;
  out.num_classes = c_count;
  out.domain_tag = spec.name;
  out.features = Matrix(c_count * spec.samples_per_class, d);
  out.labels.reserve(c_count * spec.samples_per_class);
  std::size_t row = 0;
  for (std::size_t c = 0; c < c_count; ++c) {
    std::span<const double> mu = means.row(c);
    for (std::size_t s = 0; s < spec.samples_per_class; ++s, ++row) {
      std::span<double> x = out.features.row(row);
      for (std::size_t j = 0; j < d; ++j)
        x[j] = mu[j] + spec.noise_std * sample_rng.normal();
      out.labels.push_back(static_cast<int>(c));
    }
  }
  return out;
}

Matrix stack_frames(ConstMatrixView frames, std::size_t context) {
  const std::size_t t_count = frames.rows;
  const std::size_t d = frames.cols;
  const std::size_t width = (2 * context + 1) * d;
  Matrix out(t_count, width);
  const auto last = static_cast<std::ptrdiff_t>(t_count) - 1;
  for (std::size_t t = 0; t < t_count; ++t) {
    std::span<double> dst = out.row(t);
    for (std::size_t k = 0; k <= 2 * context; ++k) {
      std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + k) -
                           static_cast<std::ptrdiff_t>(context);
      src = std::clamp<std::ptrdiff_t>(src, 0, last);
      std::span<const double> f = frames.row(static_cast<std::size_t>(src));
      std::copy(f.begin(), f.end(), dst.begin() + static_cast<std::ptrdiff_t>(k * d));
    }
  }
  return out;
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace

Dataset parse_feature_csv(std::istream &in, const FeatureFileOptions &options) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("empty feature file");
  ++line_no;
  const std::vector<std::string_view> header = split_commas(trim(line));
  if (header.size() < 2 || trim(header[0]) != "label")
    throw ParseError("header must be 'label,f0,...'", line_no);
  const std::size_t dim = header.size() - 1;
  for (std::size_t j = 0; j < dim; ++j)
    if (trim(header[j + 1]) != "f" + std::to_string(j))
      throw ParseError("header column " + std::to_string(j + 1) + " should be f" +
                           std::to_string(j),
                       line_no);

  std::vector<double> values;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    const std::vector<std::string_view> fields = split_commas(row);
    if (fields.size() != dim + 1)
      throw ParseError("expected " + std::to_string(dim + 1) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    const std::string_view lf = trim(fields[0]);
    int label = 0;
    auto [lp, lec] = std::from_chars(lf.data(), lf.data() + lf.size(), label);
    if (lec != std::errc() || lp != lf.data() + lf.size() || label < 0)
      throw ParseError("invalid label '" + std::string(lf) + "'", line_no);
    if (options.num_classes && static_cast<std::size_t>(label) >= *options.num_classes)
      throw ParseError("label " + std::to_string(label) + " >= number of classes " +
                           std::to_string(*options.num_classes),
                       line_no);
    labels.push_back(label);
    for (std::size_t j = 1; j <= dim; ++j) {
      const std::string_view f = trim(fields[j]);
      double v = 0.0;
      auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || p != f.data() + f.size() || !std::isfinite(v))
        throw ParseError("non-numeric feature '" + std::string(f) + "' in column " +
                             std::to_string(j),
                         line_no);
      values.push_back(v);
    }
  }
  if (labels.empty()) throw ParseError("feature file has no samples", line_no);

  Dataset out;
  out.features = Matrix(labels.size(), dim, std::move(values));
  out.labels = std::move(labels);
  out.num_classes = options.num_classes.value_or(
      static_cast<std::size_t>(*std::max_element(out.labels.begin(), out.labels.end())) +
      1);
  out.domain_tag = options.domain_tag;
  if (options.stack_context)
    out.features = stack_frames(out.features, *options.stack_context);
  return out;
}

Dataset load_feature_file(const std::filesystem::path &path,
                          const FeatureFileOptions &options) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open feature file " + path.string());
  FeatureFileOptions opts = options;
  if (opts.domain_tag.empty()) opts.domain_tag = path.stem().string();
  try {
    return parse_feature_csv(in, opts);
  } catch (const ParseError &e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_feature_csv(std::ostream &out, const Dataset &data) {
  out << "label";
  for (std::size_t j = 0; j < data.feature_dim(); ++j) out << ",f" << j;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.labels[i];
    for (double v : data.features.row(i)) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out << buf;
    }
    out << '\n';
  }
}

void save_feature_file(const std::filesystem::path &path, const Dataset &data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write feature file " + path.string());
  write_feature_csv(out, data);
  if (!out) throw Error("failed writing feature file " + path.string());
}

Dataset pool(std::span<const Dataset> datasets) {
  if (datasets.empty()) throw InvalidArgument("pool: no datasets given");
  const std::size_t dim = datasets.front().feature_dim();
  const std::size_t classes = datasets.front().num_classes;
  std::size_t total = 0;
  for (const Dataset &d : datasets) {
    if (d.feature_dim() != dim)
      throw DimensionError("pool: feature dims " + std::to_string(dim) + " and " +
                           std::to_string(d.feature_dim()));
    if (d.num_classes != classes)
      throw DimensionError("pool: class counts " + std::to_string(classes) + " and " +
                           std::to_string(d.num_classes));
    total += d.size();
  }
  Dataset out;
  std::vector<double> values;
  values.reserve(total * dim);
  out.labels.reserve(total);
  for (const Dataset &d : datasets) {
    values.insert(values.end(), d.features.data().begin(), d.features.data().end());
    out.labels.insert(out.labels.end(), d.labels.begin(), d.labels.end());
  }
  out.features = Matrix(total, dim, std::move(values));
  out.num_classes = classes;
  out.domain_tag = "pooled";
  return out;
}

DatasetSplit split(const Dataset &data, const SplitFractions &fractions,
                   std::uint64_t seed) {
  data.validate();
  if (!(fractions.train > 0.0) || !(fractions.dev > 0.0) || !(fractions.eval > 0.0))
    throw InvalidArgument("split: every fraction must be positive");
  if (std::abs(fractions.train + fractions.dev + fractions.eval - 1.0) > 1e-9)
    throw InvalidArgument("split: fractions must sum to 1");

  std::vector<std::vector<std::size_t>> by_class(data.num_classes);
  for (std::size_t i = 0; i < data.size(); ++i)
    by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);

  Rng rng = Rng(seed).split("split");
  std::vector<std::size_t> train, dev, eval;
  std::size_t seen = 0;
  const double cut1 = fractions.train;
  const double cut2 = fractions.train + fractions.dev;
  auto rounded = [](double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); };
  for (std::vector<std::size_t> &rows : by_class) {
    std::shuffle(rows.begin(), rows.end(), rng.engine());
    const std::size_t before = seen;
    seen += rows.size();
    // Cumulative rounding keeps totals exact and each class within one sample.
    const std::size_t n_train = rounded(cut1 * static_cast<double>(seen)) -
                                rounded(cut1 * static_cast<double>(before));
    const std::size_t n_first_two = rounded(cut2 * static_cast<double>(seen)) -
                                    rounded(cut2 * static_cast<double>(before));
    const std::size_t a = std::min(n_train, rows.size());
    const std::size_t b = std::clamp(n_first_two, a, rows.size());
    train.insert(train.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(a));
    dev.insert(dev.end(), rows.begin() + static_cast<std::ptrdiff_t>(a),
               rows.begin() + static_cast<std::ptrdiff_t>(b));
    eval.insert(eval.end(), rows.begin() + static_cast<std::ptrdiff_t>(b), rows.end());
  }
  if (train.empty() || dev.empty() || eval.empty())
    throw InvalidArgument("split: a part of dataset '" + data.domain_tag +
                          "' would be empty");
  std::sort(train.begin(), train.end());
  std::sort(dev.begin(), dev.end());
  std::sort(eval.begin(), eval.end());
  return {data.subset(train), data.subset(dev), data.subset(eval)};
}

std::vector<std::size_t> class_histogram(const Dataset &data) {
  std::vector<std::size_t> h(data.num_classes, 0);
  for (int y : data.labels) ++h.at(static_cast<std::size_t>(y));
  return h;
}

}  // namespace domexp
