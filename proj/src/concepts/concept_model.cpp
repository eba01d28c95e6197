// Copyright 2026 The lexplain Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lexplain/concepts/concept_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "common/container.hpp"
#include "lexplain/kernels.hpp"
#include "lexplain/random.hpp"

namespace lexplain {

namespace {

constexpr detail::Magic kConceptMagic = {'L', 'X', 'C', 'P', 'T', '\0', '\0', '\1'};

const std::vector<std::pair<ConceptKind, std::string>>& kind_names() {
  static const std::vector<std::pair<ConceptKind, std::string>> kNames = {
      {ConceptKind::kNeurons, "neurons"},         {ConceptKind::kKMeans, "kmeans"},
      {ConceptKind::kPca, "pca"},                 {ConceptKind::kSvd, "svd"},
      {ConceptKind::kNmf, "nmf"},                 {ConceptKind::kSaeVanilla, "sae_vanilla"},
      {ConceptKind::kSaeTopK, "sae_topk"},        {ConceptKind::kSaeBatchTopK, "sae_batchtopk"}};
  return kNames;
}

void check_activations(const Mat& a) {
  require(a.rows() > 0, ErrorCode::kInsufficientData, "no activation rows");
  require(a.cols() > 0, ErrorCode::kInvalidActivations, "activations have zero width");
  require(a.allFinite(), ErrorCode::kInvalidActivations, "activations contain NaN or infinite values");
}

void round_to_float(Mat& m) { m = m.cast<float>().cast<double>(); }
void round_to_float(Vec& v) { v = v.cast<float>().cast<double>(); }

// Deterministic sign: the largest-magnitude entry of each row is positive.
void fix_signs(Mat& d) {
  for (Eigen::Index r = 0; r < d.rows(); ++r) {
    Eigen::Index j = 0;
    d.row(r).cwiseAbs().maxCoeff(&j);
    if (d(r, j) < 0) d.row(r) *= -1.0;
  }
}

double mse(const Mat& a, const Mat& b) { return (a - b).squaredNorm() / static_cast<double>(a.size()); }

// Keeps the `keep` largest entries of the whole matrix (ties to the lower
// row-major index).
Mat batch_topk(const Mat& values, std::size_t keep) {
  const auto n = static_cast<std::size_t>(values.size());
  keep = std::min(keep, n);
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const double* v = values.data();
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(),
                    [&](Eigen::Index a, Eigen::Index b) { return v[a] > v[b] || (v[a] == v[b] && a < b); });
  Mat out = Mat::Zero(values.rows(), values.cols());
  for (std::size_t i = 0; i < keep; ++i) out.data()[idx[i]] = v[idx[i]];
  return out;
}

struct Adam {
  Mat m, v;
  void init(Eigen::Index rows, Eigen::Index cols) {
    m = Mat::Zero(rows, cols);
    v = Mat::Zero(rows, cols);
  }
  void step(Mat& param, const Mat& grad, double lr, std::size_t t) {
    constexpr double kB1 = 0.9, kB2 = 0.999, kEps = 1e-8;
    m = kB1 * m + (1 - kB1) * grad;
    v = kB2 * v + (1 - kB2) * grad.cwiseProduct(grad);
    const double c1 = 1 - std::pow(kB1, static_cast<double>(t));
    const double c2 = 1 - std::pow(kB2, static_cast<double>(t));
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kEps);
  }
};

Mat vec_block(const Vec& v) { return Mat(v.transpose()); }

void fit_kmeans_impl(const Mat& a, const ConceptConfig& cfg, Mat& centroids, FitMeta& meta) {
  const Eigen::Index n = a.rows();
  const auto c = static_cast<Eigen::Index>(cfg.c);
  Rng rng(cfg.seed);
  // k-means++ seeding.
  centroids = Mat(c, a.cols());
  centroids.row(0) = a.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
  Vec dist = (a.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (Eigen::Index j = 1; j < c; ++j) {
    const double total = dist.sum();
    Eigen::Index pick = 0;
    if (total <= 0.0) {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    } else {
      const double u = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += dist(i);
        if (acc > u) {
          pick = i;
          break;
        }
      }
    }
    centroids.row(j) = a.row(pick);
    dist = dist.cwiseMin((a.rowwise() - centroids.row(j)).rowwise().squaredNorm());
  }

  std::vector<int> labels, previous;
  for (std::size_t it = 0; it < std::max<std::size_t>(cfg.max_iters, 1); ++it) {
    const double inertia = kernels::assign_nearest(a, centroids, labels);
    meta.loss_history.push_back(inertia);
    meta.n_iters = it + 1;
    if (labels == previous) break;
    previous = labels;
    Mat sums = Mat::Zero(c, a.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(c), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels[static_cast<std::size_t>(i)]) += a.row(i);
      ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    for (Eigen::Index j = 0; j < c; ++j)
      if (const auto count = counts[static_cast<std::size_t>(j)]; count > 0)
        centroids.row(j) = sums.row(j) / static_cast<double>(count);
  }
  meta.final_loss = meta.loss_history.back();
}

}  // namespace

std::string_view to_string(ConceptKind kind) {
  for (const auto& [k, name] : kind_names())
    if (k == kind) return name;
  return "unknown";
}

ConceptKind parse_concept_kind(std::string_view name) {
  for (const auto& [k, n] : kind_names())
    if (n == name) return k;
  fail(ErrorCode::kInvalidConfig, "unknown concept model kind '" + std::string(name) + "'");
}

const std::vector<std::string>& concept_kinds() {
  static const std::vector<std::string> kNames = [] {
    std::vector<std::string> out;
    for (const auto& kv : kind_names()) out.push_back(kv.second);
    return out;
  }();
  return kNames;
}

bool is_sae(ConceptKind kind) {
  return kind == ConceptKind::kSaeVanilla || kind == ConceptKind::kSaeTopK || kind == ConceptKind::kSaeBatchTopK;
}

bool is_sign_ambiguous(ConceptKind kind) { return kind == ConceptKind::kPca || kind == ConceptKind::kSvd; }

void SAEConfig::validate(ConceptKind kind) const {
  require(c >= 1, ErrorCode::kInvalidConfig, "sae.c must be at least 1");
  if (kind == ConceptKind::kSaeTopK || kind == ConceptKind::kSaeBatchTopK)
    require(k >= 1 && k <= c, ErrorCode::kInvalidConfig, "sae.k must lie in [1, c]");
  require(l1_coef >= 0.0, ErrorCode::kInvalidConfig, "sae.l1_coef must be nonnegative");
  require(lr > 0.0 && std::isfinite(lr), ErrorCode::kInvalidConfig, "sae.lr must be positive");
  require(epochs >= 1, ErrorCode::kInvalidConfig, "sae.epochs must be at least 1");
  require(batch_size >= 1, ErrorCode::kInvalidConfig, "sae.batch_size must be at least 1");
}

nlohmann::ordered_json to_json(const ConceptConfig& cfg, ConceptKind kind) {
  nlohmann::ordered_json j;
  j["c"] = cfg.c;
  j["seed"] = cfg.seed;
  if (kind == ConceptKind::kKMeans || kind == ConceptKind::kNmf) {
    j["max_iters"] = cfg.max_iters;
    j["tol"] = cfg.tol;
  }
  if (is_sae(kind)) {
    j["sae"] = {{"k", cfg.sae.k},           {"l1_coef", cfg.sae.l1_coef},       {"lr", cfg.sae.lr},
                {"epochs", cfg.sae.epochs}, {"batch_size", cfg.sae.batch_size}, {"standardize", cfg.sae.standardize}};
  }
  return j;
}

ConceptConfig concept_config_from_json(const nlohmann::json& j) {
  ConceptConfig cfg;
  cfg.c = j.value("c", cfg.c);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.max_iters = j.value("max_iters", cfg.max_iters);
  cfg.tol = j.value("tol", cfg.tol);
  if (j.contains("sae")) {
    const auto& s = j["sae"];
    cfg.sae.k = s.value("k", cfg.sae.k);
    cfg.sae.l1_coef = s.value("l1_coef", cfg.sae.l1_coef);
    cfg.sae.lr = s.value("lr", cfg.sae.lr);
    cfg.sae.epochs = s.value("epochs", cfg.sae.epochs);
    cfg.sae.batch_size = s.value("batch_size", cfg.sae.batch_size);
    cfg.sae.standardize = s.value("standardize", cfg.sae.standardize);
  }
  return cfg;
}

// ---------------------------------------------------------------------------

Mat ConceptModel::standardized(const Mat& a) const {
  if (std_scale_.size() == 0) return a;
  Mat out = a.rowwise() - std_mean_.transpose();
  return out.array().rowwise() / std_scale_.transpose().array();
}

Mat ConceptModel::pre_activations(const Mat& a) const {
  require(static_cast<std::size_t>(a.cols()) == width(), ErrorCode::kDimensionMismatch,
          "activation width " + std::to_string(a.cols()) + " does not match model width " + std::to_string(width()));
  if (!is_sae(kind_)) return encode(a);
  return (standardized(a) * encoder_weight_).rowwise() + encoder_bias_.transpose();
}

Mat ConceptModel::encode(const Mat& a) const {
  require(static_cast<std::size_t>(a.cols()) == width(), ErrorCode::kDimensionMismatch,
          "activation width " + std::to_string(a.cols()) + " does not match model width " + std::to_string(width()));
  switch (kind_) {
    case ConceptKind::kNeurons: return a;
    case ConceptKind::kKMeans: {
      std::vector<int> labels;
      kernels::assign_nearest(a, dictionary_, labels);
      Mat t = Mat::Zero(a.rows(), dictionary_.rows());
      for (Eigen::Index i = 0; i < a.rows(); ++i) t(i, labels[static_cast<std::size_t>(i)]) = 1.0;
      return t;
    }
    case ConceptKind::kPca: return (a.rowwise() - offset_.transpose()) * dictionary_.transpose();
    case ConceptKind::kSvd: return a * dictionary_.transpose();
    case ConceptKind::kNmf: {
      const Mat shifted = a.array() + shift_;
      return kernels::nnls_rows(dictionary_ * dictionary_.transpose(), shifted * dictionary_.transpose(), 1000, 1e-12);
    }
    case ConceptKind::kSaeVanilla: return pre_activations(a).cwiseMax(0.0);
    case ConceptKind::kSaeTopK:
    case ConceptKind::kSaeBatchTopK: return kernels::topk_rows(pre_activations(a), k_);
  }
  return a;
}

Mat ConceptModel::decode(const Mat& t) const {
  require(static_cast<std::size_t>(t.cols()) == concepts(), ErrorCode::kDimensionMismatch,
          "code width " + std::to_string(t.cols()) + " does not match concept count " + std::to_string(concepts()));
  if (kind_ == ConceptKind::kNeurons) return t;
  Mat out = t * dictionary_;
  if (offset_.size() > 0) out.rowwise() += offset_.transpose();
  if (kind_ == ConceptKind::kNmf) out.array() -= shift_;
  if (std_scale_.size() > 0) {
    out.array().rowwise() *= std_scale_.transpose().array();
    out.rowwise() += std_mean_.transpose();
  }
  return out;
}

Mat ConceptModel::decode_backward(const Mat& da) const {
  require(static_cast<std::size_t>(da.cols()) == width(), ErrorCode::kDimensionMismatch,
          "gradient width does not match model width");
  if (kind_ == ConceptKind::kNeurons) return da;
  if (std_scale_.size() > 0) {
    const Mat scaled = da.array().rowwise() * std_scale_.transpose().array();
    return scaled * dictionary_.transpose();
  }
  return da * dictionary_.transpose();
}

void ConceptModel::round_parameters() {
  round_to_float(dictionary_);
  round_to_float(offset_);
  round_to_float(encoder_weight_);
  round_to_float(encoder_bias_);
  round_to_float(std_mean_);
  round_to_float(std_scale_);
}

ConceptModel ConceptModel::from_dictionary(ConceptKind kind, const Mat& dictionary, const Vec& mean) {
  require(!is_sae(kind), ErrorCode::kInvalidConfig, "SAE models need encoder parameters; train them instead");
  require(dictionary.rows() > 0 && dictionary.cols() > 0, ErrorCode::kInvalidConfig, "empty dictionary");
  ConceptModel m;
  m.kind_ = kind;
  m.dictionary_ = dictionary;
  if (kind == ConceptKind::kPca) m.offset_ = mean.size() > 0 ? mean : Vec::Zero(dictionary.cols());
  m.config_.c = static_cast<std::size_t>(dictionary.rows());
  m.round_parameters();
  return m;
}

// ---------------------------------------------------------------------------

ConceptModel fit_concepts(ConceptKind kind, const ActivationBundle& bundle, const ConceptConfig& cfg) {
  ConceptModel m = fit_concepts(kind, to_double(bundle.matrix), cfg);
  m.source = {{"split_point", bundle.split_point}, {"granularity", to_string(bundle.granularity)}};
  return m;
}

ConceptModel fit_concepts(ConceptKind kind, const Mat& a, const ConceptConfig& cfg_in) {
  check_activations(a);
  if (is_sae(kind)) {
    SAEConfig sae = cfg_in.sae;
    sae.c = cfg_in.c;
    sae.seed = cfg_in.seed;
    ConceptModel m = train_sae(a, sae, kind);
    m.config_ = cfg_in;
    m.config_.sae = sae;
    return m;
  }

  ConceptConfig cfg = cfg_in;
  const auto n = static_cast<std::size_t>(a.rows());
  const auto d = static_cast<std::size_t>(a.cols());
  if (kind == ConceptKind::kNeurons) cfg.c = d;
  require(cfg.c >= 1, ErrorCode::kInvalidConfig, "c must be at least 1");
  if (kind != ConceptKind::kNeurons)
    require(n >= cfg.c, ErrorCode::kInsufficientData,
            std::to_string(n) + " activation rows is fewer than c = " + std::to_string(cfg.c));
  if (kind == ConceptKind::kPca || kind == ConceptKind::kSvd)
    require(cfg.c <= d, ErrorCode::kInvalidConfig,
            "c = " + std::to_string(cfg.c) + " exceeds activation width " + std::to_string(d));

  ConceptModel m;
  m.kind_ = kind;
  m.config_ = cfg;
  m.meta_.seed = cfg.seed;
  const auto c = static_cast<Eigen::Index>(cfg.c);

  switch (kind) {
    case ConceptKind::kNeurons:
      m.dictionary_ = Mat::Identity(a.cols(), a.cols());
      break;
    case ConceptKind::kKMeans:
      fit_kmeans_impl(a, cfg, m.dictionary_, m.meta_);
      break;
    case ConceptKind::kPca: {
      m.offset_ = a.colwise().mean().transpose();
      const Mat centered = a.rowwise() - m.offset_.transpose();
      const Mat cov = centered.transpose() * centered / static_cast<double>(n);
      Eigen::SelfAdjointEigenSolver<Mat> eig(cov);
      // Eigenvalues ascend; keep the last c in reverse order.
      m.dictionary_ = Mat(c, a.cols());
      for (Eigen::Index j = 0; j < c; ++j) m.dictionary_.row(j) = eig.eigenvectors().col(a.cols() - 1 - j).transpose();
      fix_signs(m.dictionary_);
      m.meta_.n_iters = 1;
      break;
    }
    case ConceptKind::kSvd: {
      Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeThinV);
      m.dictionary_ = svd.matrixV().leftCols(c).transpose();
      fix_signs(m.dictionary_);
      m.meta_.n_iters = 1;
      break;
    }
    case ConceptKind::kNmf: {
      const double lo = a.minCoeff();
      m.shift_ = lo < 0.0 ? -lo : 0.0;
      const Mat x = a.array() + m.shift_;
      Rng rng(cfg.seed);
      const double scale = std::sqrt(std::max(x.mean(), 1e-12) / static_cast<double>(c));
      Mat w(a.rows(), c), h(c, a.cols());
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = scale * rng.uniform(0.01, 1.0);
      for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = scale * rng.uniform(0.01, 1.0);
      constexpr double kEps = 1e-12;
      const auto objective = [&] { return (x - w * h).squaredNorm() / static_cast<double>(x.size()); };
      double previous = objective();
      for (std::size_t it = 0; it < std::max<std::size_t>(cfg.max_iters, 1); ++it) {
        h.array() *= (w.transpose() * x).array() / ((w.transpose() * w * h).array() + kEps);
        w.array() *= (x * h.transpose()).array() / ((w * (h * h.transpose())).array() + kEps);
        const double current = objective();
        m.meta_.loss_history.push_back(current);
        m.meta_.n_iters = it + 1;
        if (previous - current <= cfg.tol * std::max(previous, 1e-300)) break;
        previous = current;
      }
      m.dictionary_ = h;
      break;
    }
    default:
      break;
  }
  m.round_parameters();
  if (kind != ConceptKind::kKMeans) m.meta_.final_loss = mse(a, m.reconstruct(a));
  return m;
}

ConceptModel train_sae(const Mat& a, const SAEConfig& cfg, ConceptKind variant,
                       const std::function<void(std::size_t, double)>& on_epoch) {
  require(is_sae(variant), ErrorCode::kInvalidConfig, "train_sae needs an SAE kind");
  cfg.validate(variant);
  check_activations(a);

  ConceptModel m;
  m.kind_ = variant;
  m.k_ = variant == ConceptKind::kSaeVanilla ? 0 : cfg.k;
  m.config_.c = cfg.c;
  m.config_.seed = cfg.seed;
  m.config_.sae = cfg;
  m.meta_.seed = cfg.seed;

  const Eigen::Index n = a.rows();
  const Eigen::Index d = a.cols();
  const auto c = static_cast<Eigen::Index>(cfg.c);
  if (cfg.standardize) {
    m.std_mean_ = a.colwise().mean().transpose();
    m.std_scale_ = ((a.rowwise() - m.std_mean_.transpose()).array().square().colwise().mean().sqrt()).transpose();
    for (Eigen::Index j = 0; j < d; ++j)
      if (!(m.std_scale_(j) > 1e-12)) m.std_scale_(j) = 1.0;
    round_to_float(m.std_mean_);
    round_to_float(m.std_scale_);
  }
  const Mat x = m.standardized(a);

  Rng rng(cfg.seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  Mat we(d, c);
  for (Eigen::Index i = 0; i < we.size(); ++i) we.data()[i] = rng.uniform(-bound, bound);
  Mat dec = we.transpose();
  dec.rowwise().normalize();
  Mat be = Mat::Zero(1, c);
  Mat bd = x.colwise().mean();

  Adam adam_we, adam_dec, adam_be, adam_bd;
  adam_we.init(d, c);
  adam_dec.init(c, d);
  adam_be.init(1, c);
  adam_bd.init(1, d);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::size_t step = 0;
  const double lambda = variant == ConceptKind::kSaeVanilla ? cfg.l1_coef : 0.0;

  std::vector<char> active(static_cast<std::size_t>(c), 0);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    std::fill(active.begin(), active.end(), 0);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const auto b = static_cast<Eigen::Index>(end - begin);
      Mat xb(b, d);
      for (Eigen::Index r = 0; r < b; ++r) xb.row(r) = x.row(order[begin + static_cast<std::size_t>(r)]);

      const Mat pre = (xb * we).rowwise() + be.row(0);
      Mat t;
      switch (variant) {
        case ConceptKind::kSaeVanilla: t = pre.cwiseMax(0.0); break;
        case ConceptKind::kSaeTopK: t = kernels::topk_rows(pre, cfg.k); break;
        default: t = batch_topk(pre, cfg.k * static_cast<std::size_t>(b)); break;
      }
      const Mat recon = (t * dec).rowwise() + bd.row(0);
      const Mat r = recon - xb;
      const double denom = static_cast<double>(b * d);
      const double loss = r.squaredNorm() / denom + lambda * t.cwiseAbs().sum() / static_cast<double>(b);
      ++step;
      if (!std::isfinite(loss)) {
        fail(ErrorCode::kTrainingDiverged, "loss became non-finite at step " + std::to_string(step));
      }
      epoch_loss += loss * static_cast<double>(b);
      for (Eigen::Index j = 0; j < c; ++j)
        if ((t.col(j).array() != 0.0).any()) active[static_cast<std::size_t>(j)] = 1;

      const Mat drecon = 2.0 * r / denom;
      const Mat g_dec = t.transpose() * drecon;
      const Mat g_bd = drecon.colwise().sum();
      Mat dt = drecon * dec.transpose();
      if (lambda > 0.0) dt += (lambda / static_cast<double>(b)) * t.unaryExpr([](double v) {
        return static_cast<double>((v > 0.0) - (v < 0.0));
      });
      const Mat dpre = dt.cwiseProduct((t.array() != 0.0).cast<double>().matrix());
      const Mat g_we = xb.transpose() * dpre;
      const Mat g_be = dpre.colwise().sum();

      adam_we.step(we, g_we, cfg.lr, step);
      adam_dec.step(dec, g_dec, cfg.lr, step);
      adam_be.step(be, g_be, cfg.lr, step);
      adam_bd.step(bd, g_bd, cfg.lr, step);
      for (Eigen::Index j = 0; j < c; ++j) {
        const double norm = dec.row(j).norm();
        if (norm > 0.0) dec.row(j) /= norm;
      }
    }
    epoch_loss /= static_cast<double>(n);
    m.meta_.loss_history.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  for (Eigen::Index j = 0; j < c; ++j)
    if (!active[static_cast<std::size_t>(j)]) m.meta_.dead_concepts.push_back(static_cast<std::size_t>(j));

  m.encoder_weight_ = we;
  m.encoder_bias_ = be.row(0).transpose();
  m.dictionary_ = dec;
  m.offset_ = bd.row(0).transpose();
  m.round_parameters();
  m.meta_.n_iters = step;
  m.meta_.final_loss = mse(a, m.reconstruct(a));
  return m;
}

// ---------------------------------------------------------------------------

void ConceptModel::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json header;
  header["kind"] = to_string(kind_);
  header["c"] = concepts();
  header["d"] = width();
  header["shift"] = shift_;
  header["k"] = k_;
  header["standardize"] = std_scale_.size() > 0;
  header["config"] = to_json(config_, kind_);
  header["fit_meta"] = {{"seed", meta_.seed},
                        {"n_iters", meta_.n_iters},
                        {"final_loss", meta_.final_loss},
                        {"loss_history", meta_.loss_history},
                        {"dead_concepts", meta_.dead_concepts}};
  if (!source.is_null()) header["source"] = source;

  std::vector<float> payload;
  auto blocks = nlohmann::ordered_json::array();
  const auto add = [&](const char* name, const Mat& block) {
    if (block.size() == 0) return;
    blocks.push_back({{"name", name}, {"rows", block.rows()}, {"cols", block.cols()}});
    const MatF f = block.cast<float>();
    payload.insert(payload.end(), f.data(), f.data() + f.size());
  };
  add("dictionary", dictionary_);
  add("offset", vec_block(offset_));
  add("encoder_weight", encoder_weight_);
  add("encoder_bias", vec_block(encoder_bias_));
  add("std_mean", vec_block(std_mean_));
  add("std_scale", vec_block(std_scale_));
  header["blocks"] = std::move(blocks);
  detail::write_container(path, kConceptMagic, header, payload);
}

ConceptModel ConceptModel::load(const std::filesystem::path& path) {
  const auto container = detail::read_container(path, kConceptMagic, "concept model");
  const auto& h = container.header;
  ConceptModel m;
  try {
    m.kind_ = parse_concept_kind(h.at("kind").get<std::string>());
    m.shift_ = h.at("shift").get<double>();
    m.k_ = h.at("k").get<std::size_t>();
    m.config_ = concept_config_from_json(nlohmann::json::parse(h.at("config").dump()));
    const auto& fm = h.at("fit_meta");
    m.meta_.seed = fm.at("seed").get<std::uint64_t>();
    m.meta_.n_iters = fm.at("n_iters").get<std::size_t>();
    m.meta_.final_loss = fm.at("final_loss").get<double>();
    m.meta_.loss_history = fm.at("loss_history").get<std::vector<double>>();
    m.meta_.dead_concepts = fm.at("dead_concepts").get<std::vector<std::size_t>>();
    if (h.contains("source")) m.source = h["source"];

    std::size_t pos = 0;
    for (const auto& b : h.at("blocks")) {
      const auto rows = b.at("rows").get<Eigen::Index>();
      const auto cols = b.at("cols").get<Eigen::Index>();
      const auto count = static_cast<std::size_t>(rows * cols);
      require(rows >= 0 && cols >= 0 && pos + count <= container.payload.size(), ErrorCode::kFormat,
              "concept model block exceeds payload");
      const Mat block = Eigen::Map<const MatF>(container.payload.data() + pos, rows, cols).cast<double>();
      pos += count;
      const auto name = b.at("name").get<std::string>();
      if (name == "dictionary") m.dictionary_ = block;
      else if (name == "offset") m.offset_ = block.row(0).transpose();
      else if (name == "encoder_weight") m.encoder_weight_ = block;
      else if (name == "encoder_bias") m.encoder_bias_ = block.row(0).transpose();
      else if (name == "std_mean") m.std_mean_ = block.row(0).transpose();
      else if (name == "std_scale") m.std_scale_ = block.row(0).transpose();
      else fail(ErrorCode::kFormat, "unknown concept model block '" + name + "'");
    }
    require(pos == container.payload.size(), ErrorCode::kFormat, "trailing data in concept model file");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed concept model header: ") + e.what());
  }
  require(m.dictionary_.size() > 0, ErrorCode::kFormat, "concept model has no dictionary");
  require(h.value("c", std::size_t{0}) == m.concepts() && h.value("d", std::size_t{0}) == m.width(), ErrorCode::kFormat,
          "concept model header shape disagrees with its dictionary");
  if (is_sae(m.kind_))
    require(m.encoder_weight_.rows() == m.dictionary_.cols() && m.encoder_weight_.cols() == m.dictionary_.rows(),
            ErrorCode::kFormat, "SAE encoder shape disagrees with its dictionary");
  return m;
}

}  // namespace lexplain
