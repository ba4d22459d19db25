#include "coopt/priors.hpp"

#include <cmath>
#include <cstring>

#include "coopt/kernels.hpp"
#include "coopt/rng.hpp"

namespace coopt {

namespace {

constexpr double kWeakJitter = 0.05;

Matrix gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols,
                       double scale) {
  Matrix m(rows, cols);
  for (float& f : m.v) f = static_cast<float>(rng.next_gaussian() * scale);
  return m;
}

std::vector<float> gaussian_vector(Rng& rng, std::size_t n, double scale) {
  std::vector<float> v(n);
  for (float& f : v) f = static_cast<float>(rng.next_gaussian() * scale);
  return v;
}

Matrix batch_matrix(std::span<const Sample> batch, std::size_t m) {
  Matrix x(batch.size(), m);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].x.size() != m)
      throw NumericError("extract: sample dimension mismatch (got " +
                         std::to_string(batch[i].x.size()) + ", expected " +
                         std::to_string(m) + ")");
    std::memcpy(x.row(i), batch[i].x.data(), m * sizeof(float));
  }
  return x;
}

void add_bias_rows(Matrix& m, const std::vector<float>& b) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    float* row = m.row(i);
    for (std::size_t j = 0; j < m.cols; ++j) row[j] += b[j];
  }
}

int infer_classes(const std::vector<int>& labels) {
  int c = 0;
  for (int l : labels) {
    if (l < 0) throw ConfigError("negative class label");
    c = std::max(c, l + 1);
  }
  return c;
}

}  // namespace

const char* to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::linear: return "linear";
    case PriorKind::mlp: return "mlp";
    case PriorKind::weak_mlp: return "weak-mlp";
    case PriorKind::oracle: return "oracle";
  }
  return "?";
}

PriorKind prior_kind_from_string(const std::string& s) {
  if (s == "linear") return PriorKind::linear;
  if (s == "mlp") return PriorKind::mlp;
  if (s == "weak-mlp") return PriorKind::weak_mlp;
  if (s == "oracle") return PriorKind::oracle;
  throw ConfigError("unknown prior kind '" + s + "'");
}

PriorModel PriorModel::build(const PriorModelSpec& spec,
                             const Dataset* labels_source) {
  if (spec.out_dim < 1) throw ConfigError("prior out_dim must be >= 1");
  if (spec.in_dim < 1) throw ConfigError("prior in_dim must be >= 1");
  if (spec.quality < 0.0 || spec.quality > 1.0)
    throw ConfigError("prior quality must be in [0,1]");
  if (spec.label_noise < 0.0 || spec.label_noise > 1.0)
    throw ConfigError("label_noise must be in [0,1]");

  PriorModel model;
  model.spec_ = spec;
  Rng rng(derive_seed(spec.seed, SeedRole::prior));
  const std::size_t m = spec.in_dim;
  const std::size_t l = spec.out_dim;
  const std::size_t h = spec.hidden;

  const bool needs_labels =
      spec.kind == PriorKind::oracle ||
      (spec.kind == PriorKind::weak_mlp && spec.weak_trained);
  if (needs_labels) {
    if (labels_source == nullptr || !labels_source->labels)
      throw ConfigError(std::string(to_string(spec.kind)) +
                        " prior requires a labeled dataset");
    const auto& labels = *labels_source->labels;
    if (labels.size() != labels_source->size())
      throw ConfigError("label count does not match dataset size");
    model.classes_ = infer_classes(labels);
    for (std::size_t i = 0; i < labels.size(); ++i)
      model.label_of_[labels_source->samples[i].id] = labels[i];
  }

  switch (spec.kind) {
    case PriorKind::linear:
      if (spec.identity_init) {
        if (l != m)
          throw ConfigError("identity_init requires out_dim == in_dim");
        model.w_linear_ = Matrix::identity(l);
      } else {
        model.w_linear_ = gaussian_matrix(rng, l, m, 1.0 / std::sqrt(double(m)));
      }
      break;

    case PriorKind::mlp:
      model.w1_ = gaussian_matrix(rng, h, m, 1.0 / std::sqrt(double(m)));
      model.b1_ = gaussian_vector(rng, h, 0.5);
      model.w2_ = gaussian_matrix(rng, l, h, 1.0 / std::sqrt(double(h)));
      break;

    case PriorKind::weak_mlp: {
      if (spec.weak_trained) {
        // Short classifier training run; penultimate activations are the
        // features, mapped to out_dim by a fixed seeded matrix.
        const auto& ds = *labels_source;
        const int c = model.classes_;
        model.w1_ = gaussian_matrix(rng, h, m, 1.0 / std::sqrt(double(m)));
        model.b1_ = std::vector<float>(h, 0.0f);
        Matrix head = Matrix(std::size_t(c), h);  // zero-init classifier head
        std::vector<float> head_b(std::size_t(c), 0.0f);
        model.w2_ = gaussian_matrix(rng, l, h, 1.0 / std::sqrt(double(h)));

        const std::size_t steps =
            static_cast<std::size_t>(std::llround(spec.quality *
                                                  double(spec.train_steps_max)));
        Matrix x = batch_matrix(ds.samples, m);
        const double lr = 0.5;
        const std::size_t rows = x.rows;
        for (std::size_t step = 0; step < steps; ++step) {
          Matrix hidden = kernels::map_rows(model.w1_, x);
          add_bias_rows(hidden, model.b1_);
          kernels::tanh_inplace(hidden);
          Matrix logits = kernels::map_rows(head, hidden);
          add_bias_rows(logits, head_b);
          // Softmax cross-entropy gradients, accumulated in double.
          Matrix dlogits(rows, std::size_t(c));
          for (std::size_t i = 0; i < rows; ++i) {
            double mx = logits.at(i, 0);
            for (int k = 1; k < c; ++k)
              mx = std::max(mx, double(logits.at(i, std::size_t(k))));
            double z = 0.0;
            for (int k = 0; k < c; ++k)
              z += std::exp(double(logits.at(i, std::size_t(k))) - mx);
            const int y = model.label_of_.at(ds.samples[i].id);
            for (int k = 0; k < c; ++k) {
              const double p =
                  std::exp(double(logits.at(i, std::size_t(k))) - mx) / z;
              dlogits.at(i, std::size_t(k)) =
                  static_cast<float>((p - (k == y ? 1.0 : 0.0)) / double(rows));
            }
          }
          // head -= lr * dlogits^T * hidden; dhidden = dlogits * head.
          Matrix dhidden(rows, h);
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < h; ++j) {
              double acc = 0.0;
              for (int k = 0; k < c; ++k)
                acc += double(dlogits.at(i, std::size_t(k))) *
                       double(head.at(std::size_t(k), j));
              const double t = double(hidden.at(i, j));
              dhidden.at(i, j) = static_cast<float>(acc * (1.0 - t * t));
            }
          for (int k = 0; k < c; ++k) {
            double db = 0.0;
            for (std::size_t i = 0; i < rows; ++i)
              db += double(dlogits.at(i, std::size_t(k)));
            head_b[std::size_t(k)] -= static_cast<float>(lr * db);
            for (std::size_t j = 0; j < h; ++j) {
              double acc = 0.0;
              for (std::size_t i = 0; i < rows; ++i)
                acc += double(dlogits.at(i, std::size_t(k))) *
                       double(hidden.at(i, j));
              head.at(std::size_t(k), j) -= static_cast<float>(lr * acc);
            }
          }
          for (std::size_t j = 0; j < h; ++j) {
            for (std::size_t jm = 0; jm < m; ++jm) {
              double acc = 0.0;
              for (std::size_t i = 0; i < rows; ++i)
                acc += double(dhidden.at(i, j)) * double(x.at(i, jm));
              model.w1_.at(j, jm) -= static_cast<float>(lr * acc);
            }
            double db = 0.0;
            for (std::size_t i = 0; i < rows; ++i)
              db += double(dhidden.at(i, j));
            model.b1_[j] -= static_cast<float>(lr * db);
          }
        }
      } else {
        // Blended weakness: a low-rank view of the input feeds the network,
        // and the output is pulled toward a fixed collapse direction with a
        // small per-sample jitter. Both effects fade as quality -> 1.
        const std::size_t rank = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::ceil(spec.quality * double(m))));
        model.input_map_ =
            gaussian_matrix(rng, rank, m, 1.0 / std::sqrt(double(m)));
        model.w1_ =
            gaussian_matrix(rng, h, rank, 1.0 / std::sqrt(double(rank)));
        model.b1_ = gaussian_vector(rng, h, 0.5);
        model.w2_ = gaussian_matrix(rng, l, h, 1.0 / std::sqrt(double(h)));
        model.collapse_ = gaussian_vector(rng, l, 1.0);
      }
      break;
    }

    case PriorKind::oracle:
      if (static_cast<std::size_t>(model.classes_) > l)
        throw ConfigError("oracle out_dim must be >= class count");
      break;
  }
  return model;
}

Matrix PriorModel::extract(std::span<const Sample> batch) const {
  const std::size_t m = spec_.in_dim;
  const std::size_t l = spec_.out_dim;
  if (batch.empty()) return Matrix(0, l);

  switch (spec_.kind) {
    case PriorKind::linear: {
      Matrix x = batch_matrix(batch, m);
      return kernels::map_rows(w_linear_, x);
    }

    case PriorKind::mlp: {
      Matrix x = batch_matrix(batch, m);
      Matrix hidden = kernels::map_rows(w1_, x);
      add_bias_rows(hidden, b1_);
      kernels::tanh_inplace(hidden);
      return kernels::map_rows(w2_, hidden);
    }

    case PriorKind::weak_mlp: {
      Matrix x = batch_matrix(batch, m);
      if (spec_.weak_trained) {
        Matrix hidden = kernels::map_rows(w1_, x);
        add_bias_rows(hidden, b1_);
        kernels::tanh_inplace(hidden);
        return kernels::map_rows(w2_, hidden);
      }
      Matrix z = kernels::map_rows(input_map_, x);
      Matrix hidden = kernels::map_rows(w1_, z);
      add_bias_rows(hidden, b1_);
      kernels::tanh_inplace(hidden);
      Matrix g = kernels::map_rows(w2_, hidden);
      const double q = spec_.quality;
      Matrix out(batch.size(), l);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        // Jitter is keyed by sample id, never by batch position.
        Rng jrng(derive_seed(spec_.seed, SeedRole::prior, batch[i].id + 1));
        for (std::size_t j = 0; j < l; ++j) {
          const double value = q * double(g.at(i, j)) +
                               (1.0 - q) * double(collapse_[j]) +
                               kWeakJitter * (1.0 - q) * jrng.next_gaussian();
          out.at(i, j) = static_cast<float>(value);
        }
      }
      return out;
    }

    case PriorKind::oracle: {
      Matrix out(batch.size(), l);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        auto it = label_of_.find(batch[i].id);
        if (it == label_of_.end())
          throw ConfigError("oracle prior: no label for sample id " +
                            std::to_string(batch[i].id));
        int y = it->second;
        if (spec_.label_noise > 0.0 && classes_ > 1) {
          Rng nrng(derive_seed(spec_.seed, SeedRole::prior, batch[i].id + 1));
          if (nrng.next_double() < spec_.label_noise) {
            const int wrong =
                static_cast<int>(nrng.next_below(std::uint64_t(classes_ - 1)));
            y = wrong >= y ? wrong + 1 : wrong;
          }
        }
        out.at(i, std::size_t(y)) = 1.0f;
      }
      return out;
    }
  }
  throw NumericError("unreachable prior kind");
}

std::vector<PriorModelSpec> grade_roster(const PriorModelSpec& base,
                                         std::span<const double> levels) {
  std::vector<PriorModelSpec> roster;
  roster.reserve(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 0.0 || levels[i] > 1.0)
      throw ConfigError("quality level out of [0,1]");
    PriorModelSpec spec = base;
    spec.quality = levels[i];
    spec.seed = base.seed + i;
    roster.push_back(spec);
  }
  return roster;
}

}  // namespace coopt
