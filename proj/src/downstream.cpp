#include "coopt/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coopt/rng.hpp"

namespace coopt {

namespace {

void forward_batch(const DownstreamModel& model, const Matrix& x,
                   std::span<const std::size_t> rows, std::vector<double>& h,
                   std::vector<double>& r) {
  const std::size_t b = rows.size();
  h.assign(b * model.hidden, 0.0);
  r.assign(b * model.n, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    const float* xi = x.row(rows[i]);
    double* hi = h.data() + i * model.hidden;
    for (std::size_t j = 0; j < model.hidden; ++j) {
      double acc = model.b1[j];
      const double* w = model.w1.data() + j * model.m;
      for (std::size_t k = 0; k < model.m; ++k) acc += w[k] * double(xi[k]);
      hi[j] = std::tanh(acc);
    }
    double* ri = r.data() + i * model.n;
    for (std::size_t o = 0; o < model.n; ++o) {
      double acc = model.b2[o];
      const double* w = model.w2.data() + o * model.hidden;
      for (std::size_t j = 0; j < model.hidden; ++j) acc += w[j] * hi[j];
      ri[o] = acc;
    }
  }
}

// dRep -> parameter gradients, accumulated into grad (flat layout of
// flatten_params). x rows are selected by `rows`.
void backprop(const DownstreamModel& model, const Matrix& x,
              std::span<const std::size_t> rows, const std::vector<double>& h,
              const std::vector<double>& drep, std::vector<double>& grad) {
  const std::size_t b = rows.size();
  const std::size_t m = model.m, hd = model.hidden, n = model.n;
  double* gw1 = grad.data();
  double* gb1 = gw1 + hd * m;
  double* gw2 = gb1 + hd;
  double* gb2 = gw2 + n * hd;
  std::vector<double> dh(hd);
  for (std::size_t i = 0; i < b; ++i) {
    const double* hi = h.data() + i * hd;
    const double* di = drep.data() + i * n;
    const float* xi = x.row(rows[i]);
    for (std::size_t o = 0; o < n; ++o) {
      gb2[o] += di[o];
      double* g = gw2 + o * hd;
      for (std::size_t j = 0; j < hd; ++j) g[j] += di[o] * hi[j];
    }
    for (std::size_t j = 0; j < hd; ++j) {
      double acc = 0.0;
      for (std::size_t o = 0; o < n; ++o)
        acc += di[o] * model.w2[o * hd + j];
      dh[j] = acc * (1.0 - hi[j] * hi[j]);
    }
    for (std::size_t j = 0; j < hd; ++j) {
      gb1[j] += dh[j];
      double* g = gw1 + j * m;
      for (std::size_t k = 0; k < m; ++k) g[k] += dh[j] * double(xi[k]);
    }
  }
}

// Loss over selected rows and the matching dRep. Returns the loss.
double loss_and_drep(TrainLoss loss, const std::vector<double>& r,
                     const Matrix& y, std::span<const std::size_t> rows,
                     std::size_t n, std::vector<double>* drep) {
  const std::size_t b = rows.size();
  if (drep) drep->assign(b * n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const double* ri = r.data() + i * n;
    const float* yi = y.row(rows[i]);
    if (loss == TrainLoss::mse) {
      for (std::size_t o = 0; o < n; ++o) {
        const double diff = ri[o] - double(yi[o]);
        total += 0.5 * diff * diff;
        if (drep) (*drep)[i * n + o] = diff / double(b);
      }
    } else {
      double rr = 0.0, yy = 0.0, ry = 0.0;
      for (std::size_t o = 0; o < n; ++o) {
        rr += ri[o] * ri[o];
        yy += double(yi[o]) * double(yi[o]);
        ry += ri[o] * double(yi[o]);
      }
      const double nr = std::sqrt(rr) + 1e-12;
      const double ny = std::sqrt(yy) + 1e-12;
      total += 1.0 - ry / (nr * ny);
      if (drep)
        for (std::size_t o = 0; o < n; ++o)
          (*drep)[i * n + o] =
              -(double(yi[o]) / (nr * ny) - ry * ri[o] / (nr * nr * nr * ny)) /
              double(b);
    }
  }
  return total / double(b);
}

Matrix dataset_matrix(std::span<const Sample> samples, std::size_t m) {
  Matrix x(samples.size(), m);
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = 0; j < m; ++j) x.at(i, j) = samples[i].x[j];
  return x;
}

std::vector<double> ranks(std::span<const double> xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> r(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
    const double avg = (double(i) + double(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

DownstreamModel init_model(std::size_t m, std::size_t hidden, std::size_t n,
                           std::uint64_t seed) {
  DownstreamModel model;
  model.m = m;
  model.hidden = hidden;
  model.n = n;
  model.seed = seed;
  Rng rng(derive_seed(seed, SeedRole::training));
  model.w1.resize(hidden * m);
  const double scale = 1.0 / std::sqrt(double(m));
  for (double& w : model.w1) w = rng.next_gaussian() * scale;
  model.b1.assign(hidden, 0.0);
  model.w2.assign(n * hidden, 0.0);  // zero head: constant output at init
  model.b2.assign(n, 0.0);
  return model;
}

std::vector<double> representation(const DownstreamModel& model,
                                   std::span<const float> x) {
  if (x.size() != model.m)
    throw NumericError("representation: input dimension mismatch");
  Matrix one(1, model.m);
  for (std::size_t j = 0; j < model.m; ++j) one.at(0, j) = x[j];
  std::vector<double> h, r;
  const std::size_t row0 = 0;
  forward_batch(model, one, std::span<const std::size_t>(&row0, 1), h, r);
  return r;
}

Matrix representations(const DownstreamModel& model,
                       std::span<const Sample> batch) {
  Matrix x = dataset_matrix(batch, model.m);
  std::vector<std::size_t> rows(batch.size());
  std::iota(rows.begin(), rows.end(), 0);
  std::vector<double> h, r;
  forward_batch(model, x, rows, h, r);
  Matrix out(batch.size(), model.n);
  for (std::size_t i = 0; i < out.v.size(); ++i)
    out.v[i] = static_cast<float>(r[i]);
  return out;
}

std::vector<double> flatten_params(const DownstreamModel& model) {
  std::vector<double> p;
  p.reserve(model.w1.size() + model.b1.size() + model.w2.size() +
            model.b2.size());
  p.insert(p.end(), model.w1.begin(), model.w1.end());
  p.insert(p.end(), model.b1.begin(), model.b1.end());
  p.insert(p.end(), model.w2.begin(), model.w2.end());
  p.insert(p.end(), model.b2.begin(), model.b2.end());
  return p;
}

void unflatten_params(DownstreamModel& model, std::span<const double> params) {
  std::size_t pos = 0;
  auto take = [&](std::vector<double>& dst) {
    std::copy(params.begin() + pos, params.begin() + pos + dst.size(),
              dst.begin());
    pos += dst.size();
  };
  take(model.w1);
  take(model.b1);
  take(model.w2);
  take(model.b2);
  if (pos != params.size())
    throw NumericError("unflatten_params: size mismatch");
}

double mse_loss(const DownstreamModel& model, const Matrix& x,
                const Matrix& y) {
  std::vector<std::size_t> rows(x.rows);
  std::iota(rows.begin(), rows.end(), 0);
  std::vector<double> h, r;
  forward_batch(model, x, rows, h, r);
  return loss_and_drep(TrainLoss::mse, r, y, rows, model.n, nullptr);
}

std::vector<double> mse_gradient(const DownstreamModel& model, const Matrix& x,
                                 const Matrix& y) {
  std::vector<std::size_t> rows(x.rows);
  std::iota(rows.begin(), rows.end(), 0);
  std::vector<double> h, r, drep;
  forward_batch(model, x, rows, h, r);
  loss_and_drep(TrainLoss::mse, r, y, rows, model.n, &drep);
  std::vector<double> grad(flatten_params(model).size(), 0.0);
  backprop(model, x, rows, h, drep, grad);
  return grad;
}

DownstreamModel train_on_optimized(const OptimizedDataset& data,
                                   const DownstreamConfig& cfg,
                                   std::size_t epochs, std::uint64_t seed) {
  if (data.samples.empty())
    throw ConfigError("train_on_optimized: empty dataset");
  const std::size_t m = data.samples[0].x.size();
  DownstreamModel model = init_model(m, cfg.hidden, data.n, seed);
  if (data.targets.cols != data.n)
    throw NumericError("train_on_optimized: target dimension mismatch");

  Matrix x = dataset_matrix(data.samples, m);
  const std::size_t total = x.rows;
  std::vector<std::size_t> all(total);
  std::iota(all.begin(), all.end(), 0);

  auto full_loss = [&] {
    std::vector<double> h, r;
    forward_batch(model, x, all, h, r);
    return loss_and_drep(cfg.loss, r, data.targets, all, data.n, nullptr);
  };
  model.loss_curve.push_back(full_loss());

  std::vector<std::size_t> order(all);
  std::vector<double> grad(flatten_params(model).size());
  std::vector<double> h, r, drep;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    Rng shuffle(derive_seed(seed, SeedRole::training, epoch + 1));
    for (std::size_t i = 0; i + 1 < total; ++i) {
      const std::size_t j = i + shuffle.next_below(total - i);
      std::swap(order[i], order[j]);
    }
    for (std::size_t start = 0; start < total; start += cfg.batch) {
      const std::size_t len = std::min(cfg.batch, total - start);
      std::span<const std::size_t> rows(order.data() + start, len);
      forward_batch(model, x, rows, h, r);
      loss_and_drep(cfg.loss, r, data.targets, rows, data.n, &drep);
      std::fill(grad.begin(), grad.end(), 0.0);
      backprop(model, x, rows, h, drep, grad);
      std::size_t pos = 0;
      auto apply = [&](std::vector<double>& p) {
        for (double& w : p) w -= cfg.lr * grad[pos++];
      };
      apply(model.w1);
      apply(model.b1);
      apply(model.w2);
      apply(model.b2);
    }
    model.loss_curve.push_back(full_loss());
  }
  return model;
}

ProbeResult linear_probe_features(const Matrix& features, const EvalSet& eval,
                                  std::uint64_t probe_seed,
                                  const DownstreamConfig& cfg) {
  if (eval.classes < 2)
    throw ConfigError("linear_probe: eval set must have at least 2 classes");
  if (features.rows != eval.samples.size() ||
      eval.labels.size() != eval.samples.size())
    throw ConfigError("linear_probe: feature/label count mismatch");
  const std::size_t total = features.rows;
  if (total < 4) throw ConfigError("linear_probe: eval set too small");

  // Seeded 50/50 split.
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(probe_seed, SeedRole::probe));
  for (std::size_t i = 0; i + 1 < total; ++i) {
    const std::size_t j = i + rng.next_below(total - i);
    std::swap(idx[i], idx[j]);
  }
  const std::size_t half = total / 2;
  std::span<const std::size_t> train(idx.data(), half);
  std::span<const std::size_t> test(idx.data() + half, total - half);

  // Standardize by train statistics.
  const std::size_t d = features.cols;
  std::vector<double> mean(d, 0.0), inv_std(d, 0.0);
  for (std::size_t i : train)
    for (std::size_t j = 0; j < d; ++j) mean[j] += double(features.at(i, j));
  for (double& v : mean) v /= double(half);
  for (std::size_t i : train)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = double(features.at(i, j)) - mean[j];
      inv_std[j] += c * c;
    }
  for (std::size_t j = 0; j < d; ++j)
    inv_std[j] = 1.0 / std::sqrt(inv_std[j] / double(half) + 1e-8);

  auto feat = [&](std::size_t i, std::size_t j) {
    return (double(features.at(i, j)) - mean[j]) * inv_std[j];
  };

  const int c = eval.classes;
  std::vector<double> w(std::size_t(c) * d, 0.0), b(std::size_t(c), 0.0);
  std::vector<double> logits(static_cast<std::size_t>(c), 0.0);
  ProbeResult result;

  for (std::size_t iter = 0; iter < cfg.probe_iters; ++iter) {
    std::vector<double> gw(w.size(), 0.0), gb(b.size(), 0.0);
    double loss = 0.0;
    for (std::size_t i : train) {
      double mx = -1e300;
      for (int k = 0; k < c; ++k) {
        double acc = b[std::size_t(k)];
        const double* wk = w.data() + std::size_t(k) * d;
        for (std::size_t j = 0; j < d; ++j) acc += wk[j] * feat(i, j);
        logits[std::size_t(k)] = acc;
        mx = std::max(mx, acc);
      }
      double z = 0.0;
      for (int k = 0; k < c; ++k) z += std::exp(logits[std::size_t(k)] - mx);
      const int y = eval.labels[i];
      loss += -(logits[std::size_t(y)] - mx - std::log(z));
      for (int k = 0; k < c; ++k) {
        const double p = std::exp(logits[std::size_t(k)] - mx) / z;
        const double g = (p - (k == y ? 1.0 : 0.0)) / double(half);
        gb[std::size_t(k)] += g;
        double* gwk = gw.data() + std::size_t(k) * d;
        for (std::size_t j = 0; j < d; ++j) gwk[j] += g * feat(i, j);
      }
    }
    result.loss_curve.push_back(loss / double(half));
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= cfg.probe_lr * gw[j];
    for (std::size_t j = 0; j < b.size(); ++j) b[j] -= cfg.probe_lr * gb[j];
  }

  std::vector<std::size_t> correct(std::size_t(c), 0), count(std::size_t(c), 0);
  std::size_t hits = 0;
  for (std::size_t i : test) {
    int argmax = 0;
    double best = -1e300;
    for (int k = 0; k < c; ++k) {
      double acc = b[std::size_t(k)];
      const double* wk = w.data() + std::size_t(k) * d;
      for (std::size_t j = 0; j < d; ++j) acc += wk[j] * feat(i, j);
      if (acc > best) {
        best = acc;
        argmax = k;
      }
    }
    const int y = eval.labels[i];
    ++count[std::size_t(y)];
    if (argmax == y) {
      ++hits;
      ++correct[std::size_t(y)];
    }
  }
  result.accuracy = double(hits) / double(test.size());
  result.per_class.resize(std::size_t(c));
  for (int k = 0; k < c; ++k)
    result.per_class[std::size_t(k)] =
        count[std::size_t(k)] ? double(correct[std::size_t(k)]) /
                                    double(count[std::size_t(k)])
                              : 0.0;
  return result;
}

ProbeResult linear_probe(const DownstreamModel& model, const EvalSet& eval,
                         std::uint64_t probe_seed,
                         const DownstreamConfig& cfg) {
  const Matrix features = representations(model, eval.samples);
  return linear_probe_features(features, eval, probe_seed, cfg);
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size())
    throw NumericError("spearman: length mismatch");
  if (xs.size() < 2) throw NumericError("spearman: need at least 2 points");
  const std::vector<double> rx = ranks(xs);
  const std::vector<double> ry = ranks(ys);
  const double n = double(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;  // degenerate ranking
  return sxy / std::sqrt(sxx * syy);
}

std::pair<Dataset, EvalSet> make_synthetic_benchmark(
    int classes, std::size_t n_samples, std::size_t dim, std::uint64_t seed,
    double margin, std::size_t eval_samples) {
  if (classes < 2) throw ConfigError("benchmark: need at least 2 classes");
  if (n_samples < 10 * std::size_t(classes))
    throw ConfigError("benchmark: N must be >= 10*C");
  if (eval_samples < 2 * std::size_t(classes))
    throw ConfigError("benchmark: eval set too small");

  Rng rng(derive_seed(seed, SeedRole::benchmark));
  std::vector<std::vector<double>> means(static_cast<std::size_t>(classes));
  for (auto& mu : means) {
    mu.resize(dim);
    for (double& v : mu) v = rng.next_gaussian() * margin;
  }
  auto draw = [&](std::uint64_t id, int cls) {
    Sample s;
    s.id = id;
    s.x.resize(dim);
    for (std::size_t j = 0; j < dim; ++j)
      s.x[j] = static_cast<float>(means[std::size_t(cls)][j] +
                                  rng.next_gaussian());
    return s;
  };

  Dataset train;
  train.m = dim;
  train.labels.emplace();
  for (std::size_t i = 0; i < n_samples; ++i) {
    const int cls = int(i) % classes;
    train.samples.push_back(draw(i, cls));
    train.labels->push_back(cls);
  }

  EvalSet eval;
  eval.classes = classes;
  for (std::size_t i = 0; i < eval_samples; ++i) {
    const int cls = int(i) % classes;
    eval.samples.push_back(draw(n_samples + i, cls));
    eval.labels.push_back(cls);
  }
  return {std::move(train), std::move(eval)};
}

}  // namespace coopt
