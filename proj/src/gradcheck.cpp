#include "sasq/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "sasq/simplex.hpp"

namespace sasq {

namespace {

double rel_err(double a, double n) {
  return std::abs(a - n) / std::max(1e-3, std::abs(a) + std::abs(n));
}

Vec gaussian_vec(Rng& rng, int n, double scale) {
  Vec v(n);
  for (double& x : v) x = scale * rng.gaussian();
  return v;
}

// Central finite difference of a scalar function over a flat parameter
// vector, compared against the analytic gradient with a shared kink-free
// step size.
template <class F>
void fd_compare(const F& eval, Vec theta, const Vec& analytic, CheckResult& out) {
  for (size_t j = 0; j < theta.size(); ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(theta[j]));
    const double keep = theta[j];
    theta[j] = keep + h;
    const double up = eval(theta);
    theta[j] = keep - h;
    const double dn = eval(theta);
    theta[j] = keep;
    const double fd = (up - dn) / (2.0 * h);
    out.max_err = std::max(out.max_err, rel_err(analytic[j], fd));
    ++out.checked;
  }
}

}  // namespace

CheckResult check_oracle_equivalence(int draws, std::uint64_t seed) {
  CheckResult out;
  out.name = "oracle-equivalence";
  out.tolerance = 1e-9;
  Rng rng(seed);
  for (int i = 0; i < draws; ++i) {
    const int n = 2 + i % 5;
    const Vec z = gaussian_vec(rng, n, 2.0);
    const Vec fast = sparsemax(z);
    const Vec slow = oracle_simplex_projection(z);
    for (int j = 0; j < n; ++j) out.max_err = std::max(out.max_err, std::abs(fast[j] - slow[j]));
    ++out.checked;
  }
  out.pass = out.max_err < out.tolerance;
  return out;
}

CheckResult check_jvp(Normalizer kind, int instances, std::uint64_t seed) {
  CheckResult out;
  out.name = kind == Normalizer::Sparse ? "sparsemax-jvp" : "softmax-jvp";
  out.tolerance = 1e-6;
  if (kind == Normalizer::None) throw std::invalid_argument("check_jvp: no JVP for kind none");
  Rng rng(seed);
  const double h = 1e-6;
  for (int i = 0; i < instances; ++i) {
    const int n = 2 + i % 7;
    const Vec z = gaussian_vec(rng, n, 2.0);
    const Vec v = gaussian_vec(rng, n, 1.0);
    Vec zp = z, zm = z;
    for (int j = 0; j < n; ++j) {
      zp[j] += h * v[j];
      zm[j] -= h * v[j];
    }
    if (kind == Normalizer::Sparse &&
        (sparsemax_support(zp) != sparsemax_support(z) ||
         sparsemax_support(zm) != sparsemax_support(z))) {
      ++out.skipped;  // kink between the probe points: derivative undefined
      continue;
    }
    const Vec fp = kind == Normalizer::Sparse ? sparsemax(zp) : softmax(zp);
    const Vec fm = kind == Normalizer::Sparse ? sparsemax(zm) : softmax(zm);
    const Vec a = kind == Normalizer::Sparse ? sparsemax_jvp(z, v) : softmax_jvp(z, v);
    for (int j = 0; j < n; ++j)
      out.max_err = std::max(out.max_err, rel_err(a[j], (fp[j] - fm[j]) / (2.0 * h)));
    ++out.checked;
  }
  out.pass = out.max_err < out.tolerance;
  return out;
}

CheckResult check_dense_fd(int instances, std::uint64_t seed) {
  CheckResult out;
  out.name = "dense-fd";
  out.tolerance = 1e-4;
  Rng rng(seed);
  for (int i = 0; i < instances; ++i) {
    const int rows = 1 + rng.uniform_int(4);
    const int cols = 1 + rng.uniform_int(5);
    DenseLayer layer{xavier_init(cols, rows, rng), gaussian_vec(rng, rows, 0.5)};
    const Vec x = gaussian_vec(rng, cols, 1.0);
    const Vec u = gaussian_vec(rng, rows, 1.0);

    // loss = sum_r u_r tanh((W x + b)_r)
    const Vec y = dense_forward(layer, x);
    Vec up(rows);
    for (int r = 0; r < rows; ++r) {
      const double th = std::tanh(y[r]);
      up[r] = u[r] * (1.0 - th * th);
    }
    DenseGrads g = dense_backward(layer, x, up);

    Vec theta = layer.W.a;
    theta.insert(theta.end(), layer.b.begin(), layer.b.end());
    theta.insert(theta.end(), x.begin(), x.end());
    Vec analytic = g.W.a;
    analytic.insert(analytic.end(), g.b.begin(), g.b.end());
    analytic.insert(analytic.end(), g.x.begin(), g.x.end());

    const auto eval = [&](const Vec& t) {
      DenseLayer L{Mat(rows, cols), Vec(t.begin() + rows * cols, t.begin() + rows * cols + rows)};
      L.W.a.assign(t.begin(), t.begin() + rows * cols);
      const Vec xin(t.end() - cols, t.end());
      const Vec yy = dense_forward(L, xin);
      double loss = 0.0;
      for (int r = 0; r < rows; ++r) loss += u[r] * std::tanh(yy[r]);
      return loss;
    };
    fd_compare(eval, theta, analytic, out);
  }
  out.pass = out.max_err < out.tolerance;
  return out;
}

CheckResult check_lstm_fd(int instances, std::uint64_t seed) {
  CheckResult out;
  out.name = "lstm-fd";
  out.tolerance = 1e-4;
  Rng rng(seed);
  for (int i = 0; i < instances; ++i) {
    const int I = 1 + rng.uniform_int(4);
    const int D = 1 + rng.uniform_int(4);
    LstmParams p{xavier_init(I + D, D, rng), xavier_init(I + D, D, rng),
                 xavier_init(I + D, D, rng), xavier_init(I + D, D, rng),
                 gaussian_vec(rng, D, 0.3), gaussian_vec(rng, D, 0.3),
                 gaussian_vec(rng, D, 0.3), gaussian_vec(rng, D, 0.3)};
    const Vec x = gaussian_vec(rng, I, 1.0);
    LstmState s0{gaussian_vec(rng, D, 0.5), gaussian_vec(rng, D, 0.5)};
    const Vec u = gaussian_vec(rng, D, 1.0);
    const Vec v = gaussian_vec(rng, D, 1.0);

    LstmCache cache;
    lstm_step(p, x, s0, cache);
    LstmGrads grads = lstm_zero_grads(p);
    Vec dx;
    LstmState dprev;
    lstm_backward(p, cache, u, v, grads, dx, dprev);

    Vec theta, analytic;
    const auto push = [](Vec& dst, const Vec& src) { dst.insert(dst.end(), src.begin(), src.end()); };
    for (const Mat* m : {&p.Wi, &p.Wf, &p.Wg, &p.Wo}) push(theta, m->a);
    for (const Vec* b : {&p.bi, &p.bf, &p.bg, &p.bo}) push(theta, *b);
    push(theta, x);
    push(theta, s0.h);
    push(theta, s0.c);
    for (const Mat* m : {&grads.Wi, &grads.Wf, &grads.Wg, &grads.Wo}) push(analytic, m->a);
    for (const Vec* b : {&grads.bi, &grads.bf, &grads.bg, &grads.bo}) push(analytic, *b);
    push(analytic, dx);
    push(analytic, dprev.h);
    push(analytic, dprev.c);

    const size_t wsz = static_cast<size_t>(D) * (I + D);
    const auto eval = [&](const Vec& t) {
      LstmParams q = p;
      size_t at = 0;
      for (Mat* m : {&q.Wi, &q.Wf, &q.Wg, &q.Wo}) {
        std::copy(t.begin() + at, t.begin() + at + wsz, m->a.begin());
        at += wsz;
      }
      for (Vec* b : {&q.bi, &q.bf, &q.bg, &q.bo}) {
        std::copy(t.begin() + at, t.begin() + at + D, b->begin());
        at += D;
      }
      const Vec xin(t.begin() + at, t.begin() + at + I);
      at += I;
      LstmState sin;
      sin.h.assign(t.begin() + at, t.begin() + at + D);
      at += D;
      sin.c.assign(t.begin() + at, t.begin() + at + D);
      LstmCache c2;
      const LstmState s1 = lstm_step(q, xin, sin, c2);
      return dot(u, s1.h) + dot(v, s1.c);
    };
    fd_compare(eval, theta, analytic, out);
  }
  out.pass = out.max_err < out.tolerance;
  return out;
}

CheckResult check_pipeline(const ModelDims& dims, Normalizer kind, bool use_lstm,
                           std::uint64_t seed) {
  GradcheckReport rep = gradcheck_model(dims, kind, use_lstm, seed);
  CheckResult out;
  out.name = std::string("pipeline-") + to_string(kind) + (use_lstm ? "+lstm" : "");
  out.max_err = rep.max_rel_error;
  out.tolerance = rep.tolerance;
  out.checked = rep.checked;
  out.skipped = rep.skipped;
  out.pass = rep.pass;
  return out;
}

}  // namespace sasq
