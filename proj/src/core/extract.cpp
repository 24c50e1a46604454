// Copyright 2026 The fbp Authors
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

#include "fbp/extract.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "fbp/error.hpp"
#include "fbp/fusion.hpp"

namespace fbp {

namespace {

unsigned worker_count(unsigned requested, std::size_t jobs) {
  unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

// Runs job(i) for i in [0, count) on a small pool. The first fbp::Error
// (or other exception) is rethrown after all workers stop.
template <typename Job>
void parallel_for(std::size_t count, unsigned threads, Job job) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
        return;
      }
    }
  };
  const unsigned n = worker_count(threads, count);
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = s.find(sep, start);
    std::string item = s.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (!item.empty()) out.push_back(std::move(item));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

// Decode + squaring for one manifest row; nullopt on an undecodable image.
std::optional<ImageBuffer> load_square(const ManifestRow& row, const AnnotationSet* annotations,
                                       const PreprocessConfig& preprocess, std::string& reason) {
  ImageBuffer img;
  try {
    img = decode_image(row.path);
  } catch (const Error& e) {
    reason = e.what();
    return std::nullopt;
  }
  const FaceAnnotation* ann = annotations ? find_annotation(*annotations, row.id) : nullptr;
  return preprocess_square(img, ann, preprocess);
}

FeatureMatrix compact(std::vector<std::vector<float>>& rows, const DatasetManifest& manifest,
                      const std::vector<char>& ok, std::size_t dim) {
  std::vector<float> data;
  std::vector<std::string> ids;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!ok[i]) continue;
    ++kept;
    data.insert(data.end(), rows[i].begin(), rows[i].end());
    std::vector<float>().swap(rows[i]);
    ids.push_back(manifest.rows[i].id);
  }
  return FeatureMatrix(kept, kept ? dim : 0, std::move(data), std::move(ids));
}

}  // namespace

void ExtractConfig::validate() const {
  if (taps.empty() == !descriptor.has_value()) {
    fail(ErrorKind::kConfig, "choose exactly one feature source: taps or a descriptor");
  }
  for (const auto& t : taps) {
    if (!is_tap_name(t)) fail(ErrorKind::kConfig, "unknown tap '" + t + "'");
  }
}

ExtractResult extract_features(const DatasetManifest& manifest, const AnnotationSet* annotations,
                               const WeightStore* weights, const ExtractConfig& config) {
  config.validate();
  if (!config.taps.empty() && !weights) fail(ErrorKind::kConfig, "deep features need a weight file");
  const std::size_t n = manifest.rows.size();
  const std::size_t dim = config.descriptor ? (config.descriptor == DescriptorKind::kHog   ? kHogLength
                                               : config.descriptor == DescriptorKind::kLbp ? kLbpLength
                                                                                           : kGrayLength)
                                            : fused_dim(config.taps);
  std::vector<std::vector<float>> rows(n);
  std::vector<char> ok(n, 0);
  std::vector<std::string> reasons(n);
  const TapOptions tap_options{config.post_relu};

  parallel_for(n, config.threads, [&](std::size_t i) {
    auto square = load_square(manifest.rows[i], annotations, config.preprocess, reasons[i]);
    if (!square) return;
    if (config.descriptor) {
      rows[i] = describe(*config.descriptor, to_gray(*square)).values;
    } else {
      const TapList taps = forward_taps(normalize(*square), *weights, config.taps, tap_options);
      rows[i] = fuse_taps(taps, config.post_relu).values;
    }
    ok[i] = 1;
  });

  ExtractResult result;
  for (std::size_t i = 0; i < n; ++i) {
    if (!ok[i]) result.excluded.push_back({manifest.rows[i].id, reasons[i]});
  }
  result.features = compact(rows, manifest, ok, dim);
  return result;
}

std::vector<std::pair<std::string, ExtractResult>> extract_layer_sweep(const DatasetManifest& manifest,
                                                                       const AnnotationSet* annotations,
                                                                       const WeightStore& weights,
                                                                       const ExtractConfig& base,
                                                                       const std::vector<std::string>& layers) {
  std::vector<std::pair<std::string, ExtractResult>> out;
  if (layers.empty()) return out;
  for (const auto& l : layers) {
    if (!is_tap_name(l)) fail(ErrorKind::kConfig, "unknown tap '" + l + "'");
  }
  const std::size_t n = manifest.rows.size();
  std::vector<std::vector<std::vector<float>>> per_layer(layers.size(), std::vector<std::vector<float>>(n));
  std::vector<char> ok(n, 0);
  std::vector<std::string> reasons(n);
  const TapOptions tap_options{base.post_relu};

  parallel_for(n, base.threads, [&](std::size_t i) {
    auto square = load_square(manifest.rows[i], annotations, base.preprocess, reasons[i]);
    if (!square) return;
    const Tensor input = normalize(*square);
    const LayerSweep sweep = layer_sweep_features(std::span<const Tensor>(&input, 1), weights, layers, tap_options);
    for (std::size_t l = 0; l < layers.size(); ++l) per_layer[l][i] = std::move(sweep[l].second.front().values);
    ok[i] = 1;
  });

  std::vector<Exclusion> excluded;
  for (std::size_t i = 0; i < n; ++i) {
    if (!ok[i]) excluded.push_back({manifest.rows[i].id, reasons[i]});
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    ExtractResult r;
    r.excluded = excluded;
    r.features = compact(per_layer[l], manifest, ok, element_count(tap_shape(layers[l])));
    out.emplace_back(layers[l], std::move(r));
  }
  return out;
}

ExtractConfig apply_variant(const ExtractConfig& base, const std::string& variant) {
  const auto colon = variant.find(':');
  if (colon == std::string::npos) {
    fail(ErrorKind::kConfig, "unknown variant '" + variant + "' (expected kind:value)");
  }
  const std::string kind = variant.substr(0, colon);
  const std::string value = variant.substr(colon + 1);
  ExtractConfig c = base;
  if (kind == "mode") {
    c.preprocess.mode = parse_square_mode(value);
  } else if (kind == "descriptor") {
    c.descriptor = parse_descriptor(value);
    c.taps.clear();
  } else if (kind == "layer") {
    if (!is_tap_name(value)) fail(ErrorKind::kConfig, "unknown layer '" + value + "' in variant");
    c.taps = {value};
    c.descriptor.reset();
  } else if (kind == "taps") {
    c.taps = split_list(value, '+');
    c.descriptor.reset();
  } else {
    fail(ErrorKind::kConfig, "unknown variant kind '" + kind + "' (mode, descriptor, layer, taps)");
  }
  c.validate();
  return c;
}

AblationTable run_ablation(const DatasetManifest& manifest, const AnnotationSet* annotations,
                           const WeightStore* weights, const ExtractConfig& base,
                           const std::vector<std::string>& variants, const SplitProtocol& protocol,
                           const Regressor& regressor) {
  if (variants.empty()) fail(ErrorKind::kConfig, "ablation needs at least one variant");
  std::vector<ExtractConfig> configs;
  bool all_layers = weights != nullptr;
  for (const auto& v : variants) {
    configs.push_back(apply_variant(base, v));
    all_layers = all_layers && v.rfind("layer:", 0) == 0;
  }

  // Decoding does not depend on the variant, so the first extraction fixes the row set.
  std::vector<FeatureMatrix> ready;
  std::vector<Exclusion> excluded;
  if (all_layers && variants.size() > 1) {
    std::vector<std::string> layers;
    for (const auto& c : configs) layers.push_back(c.taps.front());
    for (auto& [layer, result] : extract_layer_sweep(manifest, annotations, *weights, base, layers)) {
      excluded = std::move(result.excluded);
      ready.push_back(std::move(result.features));
    }
  } else {
    auto first = extract_features(manifest, annotations, weights, configs.front());
    excluded = std::move(first.excluded);
    ready.push_back(std::move(first.features));
  }

  DatasetManifest kept = manifest;
  std::erase_if(kept.rows, [&](const ManifestRow& r) {
    return std::any_of(excluded.begin(), excluded.end(), [&](const Exclusion& e) { return e.id == r.id; });
  });
  const auto splits = make_splits(kept, protocol);

  std::size_t k = 0;
  return ablation_suite(kept, splits, variants,
                        [&](const std::string&) {
                          const std::size_t i = k++;
                          if (i < ready.size()) return std::move(ready[i]);
                          return extract_features(kept, annotations, weights, configs[i]).features;
                        },
                        regressor);
}

}  // namespace fbp
