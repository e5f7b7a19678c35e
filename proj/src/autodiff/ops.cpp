#include "spd/autodiff/ops.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>

#include "spd/errors.hpp"

namespace spd::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstView = Eigen::Map<const RowMat>;
using View = Eigen::Map<RowMat>;

ConstView view(const Tensor& t) {
  return ConstView(t.data(), static_cast<Eigen::Index>(t.rows()),
                   static_cast<Eigen::Index>(t.cols()));
}

View view(Tensor& t) {
  return View(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

Tensor mat(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}); }

void check_same(const Var& a, const Var& b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          std::string(op) + ": shape mismatch " + shape_string(a.value().shape()) + " vs " +
              shape_string(b.value().shape()));
}

bool valid(MaskView mask, std::size_t i) { return mask.empty() || mask[i] != 0; }

void check_mask(MaskView mask, std::size_t n, const char* op) {
  require(mask.empty() || mask.size() == n, std::string(op) + ": mask length mismatch");
}

template <typename F, typename D>
Var unary(Var a, const char* op, F f, D derivative_from_output) {
  const Tensor& x = a.value();
  Tensor y = mat(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.numel(); ++i) y[i] = f(x[i]);
  Graph* g = a.graph();
  const std::size_t out_id = g->size();
  const std::size_t in_id = a.id();
  return g->record(op, {a}, std::move(y),
                   [g, out_id, in_id, derivative_from_output](const Tensor& dy,
                                                             std::span<Tensor* const> dx) {
                     const Tensor& yv = g->value(out_id);
                     const Tensor& xv = g->value(in_id);
                     for (std::size_t i = 0; i < dy.numel(); ++i) {
                       (*dx[0])[i] += dy[i] * derivative_from_output(xv[i], yv[i]);
                     }
                   });
}

}  // namespace

Var add(Var a, Var b) {
  check_same(a, b, "add");
  Tensor y = mat(a.rows(), a.cols());
  view(y) = view(a.value()) + view(b.value());
  return a.graph()->record("add", {a, b}, std::move(y),
                           [](const Tensor& dy, std::span<Tensor* const> dx) {
                             if (dx[0] != nullptr) *dx[0] += dy;
                             if (dx[1] != nullptr) *dx[1] += dy;
                           });
}

Var sub(Var a, Var b) {
  check_same(a, b, "sub");
  Tensor y = mat(a.rows(), a.cols());
  view(y) = view(a.value()) - view(b.value());
  return a.graph()->record("sub", {a, b}, std::move(y),
                           [](const Tensor& dy, std::span<Tensor* const> dx) {
                             if (dx[0] != nullptr) *dx[0] += dy;
                             if (dx[1] != nullptr) view(*dx[1]) -= view(dy);
                           });
}

Var mul(Var a, Var b) {
  check_same(a, b, "mul");
  Tensor y = mat(a.rows(), a.cols());
  view(y) = view(a.value()).cwiseProduct(view(b.value()));
  Graph* g = a.graph();
  const std::size_t ia = a.id(), ib = b.id();
  return g->record("mul", {a, b}, std::move(y),
                   [g, ia, ib](const Tensor& dy, std::span<Tensor* const> dx) {
                     if (dx[0] != nullptr) view(*dx[0]) += view(dy).cwiseProduct(view(g->value(ib)));
                     if (dx[1] != nullptr) view(*dx[1]) += view(dy).cwiseProduct(view(g->value(ia)));
                   });
}

Var scale(Var a, double factor) {
  Tensor y = mat(a.rows(), a.cols());
  view(y) = view(a.value()) * factor;
  return a.graph()->record("scale", {a}, std::move(y),
                           [factor](const Tensor& dy, std::span<Tensor* const> dx) {
                             view(*dx[0]) += view(dy) * factor;
                           });
}

Var add_row(Var a, Var b) {
  require(b.rows() == 1 && b.cols() == a.cols(), "add_row: bias must be 1 x cols");
  Tensor y = mat(a.rows(), a.cols());
  view(y) = view(a.value()).rowwise() + view(b.value()).row(0);
  return a.graph()->record("add_row", {a, b}, std::move(y),
                           [](const Tensor& dy, std::span<Tensor* const> dx) {
                             if (dx[0] != nullptr) *dx[0] += dy;
                             if (dx[1] != nullptr) view(*dx[1]).row(0) += view(dy).colwise().sum();
                           });
}

Var matmul(Var a, Var b, bool transpose_b) {
  const std::size_t inner_b = transpose_b ? b.cols() : b.rows();
  require(a.cols() == inner_b, "matmul: inner dimensions differ (" + std::to_string(a.cols()) +
                                   " vs " + std::to_string(inner_b) + ")");
  const std::size_t out_cols = transpose_b ? b.rows() : b.cols();
  Tensor y = mat(a.rows(), out_cols);
  if (transpose_b) {
    view(y).noalias() = view(a.value()) * view(b.value()).transpose();
  } else {
    view(y).noalias() = view(a.value()) * view(b.value());
  }
  Graph* g = a.graph();
  const std::size_t ia = a.id(), ib = b.id();
  return g->record(transpose_b ? "matmul_t" : "matmul", {a, b}, std::move(y),
                   [g, ia, ib, transpose_b](const Tensor& dy, std::span<Tensor* const> dx) {
                     const ConstView av = view(g->value(ia));
                     const ConstView bv = view(g->value(ib));
                     const ConstView dyv = view(dy);
                     if (dx[0] != nullptr) {
                       if (transpose_b) {
                         view(*dx[0]).noalias() += dyv * bv;
                       } else {
                         view(*dx[0]).noalias() += dyv * bv.transpose();
                       }
                     }
                     if (dx[1] != nullptr) {
                       if (transpose_b) {
                         view(*dx[1]).noalias() += dyv.transpose() * av;
                       } else {
                         view(*dx[1]).noalias() += av.transpose() * dyv;
                       }
                     }
                   });
}

Var transpose(Var a) {
  Tensor y = mat(a.cols(), a.rows());
  view(y) = view(a.value()).transpose();
  return a.graph()->record("transpose", {a}, std::move(y),
                           [](const Tensor& dy, std::span<Tensor* const> dx) {
                             view(*dx[0]) += view(dy).transpose();
                           });
}

Var sigmoid(Var a) {
  return unary(
      a, "sigmoid",
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(
      a, "tanh", [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
  return unary(
      a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sum(Var a) {
  Tensor y = Tensor::scalar(view(a.value()).sum());
  return a.graph()->record("sum", {a}, std::move(y),
                           [](const Tensor& dy, std::span<Tensor* const> dx) {
                             view(*dx[0]).array() += dy[0];
                           });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().numel());
  Tensor y = Tensor::scalar(view(a.value()).sum() / n);
  return a.graph()->record("mean", {a}, std::move(y),
                           [n](const Tensor& dy, std::span<Tensor* const> dx) {
                             view(*dx[0]).array() += dy[0] / n;
                           });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    require(p.cols() == cols, "concat_rows: column counts differ");
    rows += p.rows();
  }
  Tensor y = mat(rows, cols);
  std::vector<std::size_t> offsets;
  std::size_t r = 0;
  for (const Var& p : parts) {
    offsets.push_back(r);
    view(y).middleRows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(p.rows())) =
        view(p.value());
    r += p.rows();
  }
  return parts[0].graph()->record(
      "concat_rows", parts, std::move(y),
      [offsets](const Tensor& dy, std::span<Tensor* const> dx) {
        for (std::size_t k = 0; k < dx.size(); ++k) {
          if (dx[k] == nullptr) continue;
          view(*dx[k]) += view(dy).middleRows(static_cast<Eigen::Index>(offsets[k]),
                                              static_cast<Eigen::Index>(dx[k]->rows()));
        }
      });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    require(p.rows() == rows, "concat_cols: row counts differ");
    cols += p.cols();
  }
  Tensor y = mat(rows, cols);
  std::vector<std::size_t> offsets;
  std::size_t c = 0;
  for (const Var& p : parts) {
    offsets.push_back(c);
    view(y).middleCols(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(p.cols())) =
        view(p.value());
    c += p.cols();
  }
  return parts[0].graph()->record(
      "concat_cols", parts, std::move(y),
      [offsets](const Tensor& dy, std::span<Tensor* const> dx) {
        for (std::size_t k = 0; k < dx.size(); ++k) {
          if (dx[k] == nullptr) continue;
          view(*dx[k]) += view(dy).middleCols(static_cast<Eigen::Index>(offsets[k]),
                                              static_cast<Eigen::Index>(dx[k]->cols()));
        }
      });
}

Var slice_rows(Var a, std::size_t start, std::size_t count) {
  require(count > 0 && start + count <= a.rows(), "slice_rows: range out of bounds");
  Tensor y = mat(count, a.cols());
  view(y) = view(a.value()).middleRows(static_cast<Eigen::Index>(start),
                                       static_cast<Eigen::Index>(count));
  return a.graph()->record("slice_rows", {a}, std::move(y),
                           [start, count](const Tensor& dy, std::span<Tensor* const> dx) {
                             view(*dx[0]).middleRows(static_cast<Eigen::Index>(start),
                                                     static_cast<Eigen::Index>(count)) += view(dy);
                           });
}

Var slice_cols(Var a, std::size_t start, std::size_t count) {
  require(count > 0 && start + count <= a.cols(), "slice_cols: range out of bounds");
  Tensor y = mat(a.rows(), count);
  view(y) = view(a.value()).middleCols(static_cast<Eigen::Index>(start),
                                       static_cast<Eigen::Index>(count));
  return a.graph()->record("slice_cols", {a}, std::move(y),
                           [start, count](const Tensor& dy, std::span<Tensor* const> dx) {
                             view(*dx[0]).middleCols(static_cast<Eigen::Index>(start),
                                                     static_cast<Eigen::Index>(count)) += view(dy);
                           });
}

Var gather_rows(Var a, std::span<const std::size_t> index) {
  require(!index.empty(), "gather_rows: empty index");
  const std::size_t cols = a.cols();
  Tensor y = mat(index.size(), cols);
  const Tensor& x = a.value();
  for (std::size_t i = 0; i < index.size(); ++i) {
    require(index[i] < x.rows(), "gather_rows: index out of range");
    std::copy_n(x.data() + index[i] * cols, cols, y.data() + i * cols);
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return a.graph()->record("gather_rows", {a}, std::move(y),
                           [idx, cols](const Tensor& dy, std::span<Tensor* const> dx) {
                             for (std::size_t i = 0; i < idx.size(); ++i) {
                               for (std::size_t c = 0; c < cols; ++c) {
                                 (*dx[0])[idx[i] * cols + c] += dy[i * cols + c];
                               }
                             }
                           });
}

Var scatter_rows(Var a, std::span<const std::size_t> index, std::size_t total) {
  require(index.size() == a.rows(), "scatter_rows: index length must equal row count");
  const std::size_t cols = a.cols();
  Tensor y = mat(total, cols);
  const Tensor& x = a.value();
  for (std::size_t i = 0; i < index.size(); ++i) {
    require(index[i] < total, "scatter_rows: index out of range");
    std::copy_n(x.data() + i * cols, cols, y.data() + index[i] * cols);
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return a.graph()->record("scatter_rows", {a}, std::move(y),
                           [idx, cols](const Tensor& dy, std::span<Tensor* const> dx) {
                             for (std::size_t i = 0; i < idx.size(); ++i) {
                               for (std::size_t c = 0; c < cols; ++c) {
                                 (*dx[0])[i * cols + c] += dy[idx[i] * cols + c];
                               }
                             }
                           });
}

Var embedding_lookup(Var table, std::span<const std::int32_t> ids) {
  require(!ids.empty(), "embedding_lookup: empty id sequence");
  const Tensor& t = table.value();
  const std::size_t dim = t.cols();
  Tensor y = mat(ids.size(), dim);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    require(ids[i] >= 0 && static_cast<std::size_t>(ids[i]) < t.rows(),
            "embedding_lookup: token id " + std::to_string(ids[i]) + " outside vocabulary of " +
                std::to_string(t.rows()));
    std::copy_n(t.data() + static_cast<std::size_t>(ids[i]) * dim, dim, y.data() + i * dim);
  }
  std::vector<std::int32_t> idv(ids.begin(), ids.end());
  return table.graph()->record("embedding_lookup", {table}, std::move(y),
                               [idv, dim](const Tensor& dy, std::span<Tensor* const> dx) {
                                 for (std::size_t i = 0; i < idv.size(); ++i) {
                                   if (idv[i] == 0) continue;  // PAD stays zero
                                   const std::size_t row = static_cast<std::size_t>(idv[i]);
                                   for (std::size_t c = 0; c < dim; ++c) {
                                     (*dx[0])[row * dim + c] += dy[i * dim + c];
                                   }
                                 }
                               });
}

Var max_pool_rows(Var a, MaskView row_mask) {
  const Tensor& x = a.value();
  const std::size_t rows = x.rows(), cols = x.cols();
  check_mask(row_mask, rows, "max_pool_rows");
  Tensor y = mat(1, cols);
  std::vector<std::size_t> argmax(cols, rows);
  for (std::size_t c = 0; c < cols; ++c) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < rows; ++r) {
      if (!valid(row_mask, r)) continue;
      if (argmax[c] == rows || x(r, c) > best) {
        best = x(r, c);
        argmax[c] = r;
      }
    }
    require(argmax[c] != rows, "max_pool_rows: every row is masked");
    y[c] = best;
  }
  return a.graph()->record("max_pool_rows", {a}, std::move(y),
                           [argmax, cols](const Tensor& dy, std::span<Tensor* const> dx) {
                             for (std::size_t c = 0; c < cols; ++c) {
                               (*dx[0])[argmax[c] * cols + c] += dy[c];
                             }
                           });
}

Var mean_pool_rows(Var a, MaskView row_mask) {
  const Tensor& x = a.value();
  const std::size_t rows = x.rows(), cols = x.cols();
  check_mask(row_mask, rows, "mean_pool_rows");
  std::size_t n = 0;
  for (std::size_t r = 0; r < rows; ++r) n += valid(row_mask, r) ? 1 : 0;
  require(n > 0, "mean_pool_rows: every row is masked");
  Tensor y = mat(1, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!valid(row_mask, r)) continue;
    for (std::size_t c = 0; c < cols; ++c) y[c] += x(r, c);
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t c = 0; c < cols; ++c) y[c] *= inv;
  Mask mask(row_mask.begin(), row_mask.end());
  return a.graph()->record("mean_pool_rows", {a}, std::move(y),
                           [mask, rows, cols, inv](const Tensor& dy, std::span<Tensor* const> dx) {
                             for (std::size_t r = 0; r < rows; ++r) {
                               if (!valid(mask, r)) continue;
                               for (std::size_t c = 0; c < cols; ++c) {
                                 (*dx[0])[r * cols + c] += dy[c] * inv;
                               }
                             }
                           });
}

Var masked_softmax_rows(Var a, MaskView row_mask, MaskView col_mask) {
  const Tensor& x = a.value();
  const std::size_t rows = x.rows(), cols = x.cols();
  check_mask(row_mask, rows, "masked_softmax_rows");
  check_mask(col_mask, cols, "masked_softmax_rows");
  bool any_col = false;
  for (std::size_t c = 0; c < cols; ++c) any_col = any_col || valid(col_mask, c);
  require(any_col, "masked_softmax_rows: every column is masked");

  Tensor y = mat(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!valid(row_mask, r)) continue;
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cols; ++c) {
      if (valid(col_mask, c)) peak = std::max(peak, x(r, c));
    }
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      if (!valid(col_mask, c)) continue;
      y(r, c) = std::exp(x(r, c) - peak);
      total += y(r, c);
    }
    for (std::size_t c = 0; c < cols; ++c) y(r, c) /= total;
  }
  Graph* g = a.graph();
  const std::size_t out_id = g->size();
  return g->record("masked_softmax_rows", {a}, std::move(y),
                   [g, out_id, rows, cols](const Tensor& dy, std::span<Tensor* const> dx) {
                     const Tensor& yv = g->value(out_id);
                     for (std::size_t r = 0; r < rows; ++r) {
                       double dot = 0.0;
                       for (std::size_t c = 0; c < cols; ++c) dot += yv(r, c) * dy(r, c);
                       for (std::size_t c = 0; c < cols; ++c) {
                         (*dx[0])(r, c) += yv(r, c) * (dy(r, c) - dot);
                       }
                     }
                   });
}

Var layer_norm_rows(Var a, Var gamma, Var beta, double eps) {
  const Tensor& x = a.value();
  const std::size_t rows = x.rows(), cols = x.cols();
  require(gamma.rows() == 1 && gamma.cols() == cols && beta.rows() == 1 && beta.cols() == cols,
          "layer_norm_rows: gamma/beta must be 1 x cols");
  Tensor normed = mat(rows, cols);
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double mu = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mu += x(r, c);
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) var += (x(r, c) - mu) * (x(r, c) - mu);
    var /= static_cast<double>(cols);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) normed(r, c) = (x(r, c) - mu) * inv_std[r];
  }
  Tensor y = mat(rows, cols);
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) y(r, c) = gv[c] * normed(r, c) + bv[c];
  }
  Graph* g = a.graph();
  const std::size_t ig = gamma.id();
  return g->record(
      "layer_norm_rows", {a, gamma, beta}, std::move(y),
      [g, ig, normed = std::move(normed), inv_std, rows, cols](const Tensor& dy,
                                                               std::span<Tensor* const> dx) {
        const Tensor& gv = g->value(ig);
        for (std::size_t r = 0; r < rows; ++r) {
          if (dx[1] != nullptr) {
            for (std::size_t c = 0; c < cols; ++c) (*dx[1])[c] += dy(r, c) * normed(r, c);
          }
          if (dx[2] != nullptr) {
            for (std::size_t c = 0; c < cols; ++c) (*dx[2])[c] += dy(r, c);
          }
          if (dx[0] == nullptr) continue;
          double mean_d = 0.0, mean_dn = 0.0;
          for (std::size_t c = 0; c < cols; ++c) {
            const double d = dy(r, c) * gv[c];
            mean_d += d;
            mean_dn += d * normed(r, c);
          }
          mean_d /= static_cast<double>(cols);
          mean_dn /= static_cast<double>(cols);
          for (std::size_t c = 0; c < cols; ++c) {
            const double d = dy(r, c) * gv[c];
            (*dx[0])(r, c) += inv_std[r] * (d - mean_d - normed(r, c) * mean_dn);
          }
        }
      });
}

Var dropout(Var a, double rate, Rng& rng, bool training) {
  require(rate >= 0.0 && rate < 1.0, "dropout rate must lie in [0, 1)");
  if (!training || rate == 0.0) return a;
  const Tensor& x = a.value();
  Tensor keep = mat(x.rows(), x.cols());
  const double survivor = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < keep.numel(); ++i) keep[i] = rng.bernoulli(rate) ? 0.0 : survivor;
  Tensor y = mat(x.rows(), x.cols());
  view(y) = view(x).cwiseProduct(view(keep));
  return a.graph()->record("dropout", {a}, std::move(y),
                           [keep = std::move(keep)](const Tensor& dy, std::span<Tensor* const> dx) {
                             view(*dx[0]) += view(dy).cwiseProduct(view(keep));
                           });
}

Var bce(Var g, int label) {
  require(g.value().numel() == 1, "bce: prediction must be a scalar");
  require(label == 0 || label == 1, "bce: label must be 0 or 1");
  const double p = g.value()[0];
  const double pc = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
  const bool clamped = pc != p;
  const double y = static_cast<double>(label);
  const double loss = -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
  return g.graph()->record("bce", {g}, Tensor::scalar(loss),
                           [p, y, clamped](const Tensor& dy, std::span<Tensor* const> dx) {
                             if (clamped) return;
                             (*dx[0])[0] += dy[0] * (-y / p + (1.0 - y) / (1.0 - p));
                           });
}

Var bce_logit(Var s, int label) {
  require(s.value().numel() == 1, "bce_logit: logit must be a scalar");
  require(label == 0 || label == 1, "bce_logit: label must be 0 or 1");
  const double z = s.value()[0];
  const double y = static_cast<double>(label);
  // softplus(z) - y z, arranged to avoid overflow for large |z|.
  const double loss = std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
  const double g = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return s.graph()->record("bce_logit", {s}, Tensor::scalar(loss),
                           [g, y](const Tensor& dy, std::span<Tensor* const> dx) { (*dx[0])[0] += dy[0] * (g - y); });
}

}  // namespace spd::ad
