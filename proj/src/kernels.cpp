#include "bipnet/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "bipnet/error.hpp"

namespace bipnet {

Kernel::Kernel(std::size_t p, std::size_t q, std::string id, bool symmetric, KernelFn eval, FastPath fast_path)
    : p_(p), q_(q), id_(std::move(id)), symmetric_(symmetric),
      eval_(std::make_shared<const KernelFn>(std::move(eval))), fast_path_(fast_path) {
  if (p_ == 0 || q_ == 0) fail(ErrorKind::usage, "kernel dimensions must be positive");
}

namespace {

std::size_t factorial(std::size_t n) {
  std::size_t r = 1;
  for (std::size_t i = 2; i <= n; ++i) r *= i;
  return r;
}

std::vector<std::vector<std::size_t>> all_permutations(std::size_t n) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<std::size_t>> out;
  do {
    out.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

// Block layout: [[a, b], [c, d]] for 2 x 2.
double h6_eval(std::span<const double> y) { return y[0] * y[1] * y[2] * y[3]; }

// Motif 14 (path through two row nodes and three column nodes) with
// entries y[r*3 + c].
double h14_raw_eval(std::span<const double> y) {
  auto Y = [&](int r, int c) { return y[static_cast<std::size_t>(r * 3 + c)]; };
  return Y(0, 0) * Y(0, 1) * Y(1, 1) * Y(1, 2) * (1.0 - Y(1, 0)) * (1.0 - Y(0, 2));
}

// Automorphism-reduced symmetrization: six of the twelve row/column
// relabelings of the motif are distinct.
double h14_eval(std::span<const double> y) {
  auto Y = [&](int r, int c) { return y[static_cast<std::size_t>(r * 3 + c)]; };
  const double s = Y(0, 0) * Y(0, 1) * Y(1, 1) * Y(1, 2) * (1.0 - Y(1, 0)) * (1.0 - Y(0, 2)) +
                   Y(0, 1) * Y(0, 2) * Y(1, 2) * Y(1, 0) * (1.0 - Y(0, 0)) * (1.0 - Y(1, 1)) +
                   Y(0, 2) * Y(0, 0) * Y(1, 0) * Y(1, 1) * (1.0 - Y(0, 1)) * (1.0 - Y(1, 2)) +
                   Y(1, 0) * Y(1, 1) * Y(0, 1) * Y(0, 2) * (1.0 - Y(0, 0)) * (1.0 - Y(1, 2)) +
                   Y(1, 1) * Y(1, 2) * Y(0, 2) * Y(0, 0) * (1.0 - Y(1, 0)) * (1.0 - Y(0, 1)) +
                   Y(1, 2) * Y(1, 0) * Y(0, 0) * Y(0, 1) * (1.0 - Y(1, 1)) * (1.0 - Y(0, 2));
  return s / 6.0;
}

double hA1_raw_eval(std::span<const double> y) { return y[0] * (y[0] - 1.0) * y[3]; }
double hA2_raw_eval(std::span<const double> y) { return y[0] * y[1] * y[3]; }
double hA_raw_eval(std::span<const double> y) { return hA1_raw_eval(y) - 2.0 * hA2_raw_eval(y); }
double pair_product(std::span<const double> y) { return y[0] * y[1]; }
double single(std::span<const double> y) { return y[0]; }
double h2_eval(std::span<const double> y) { return 0.5 * (y[0] * y[3] + y[1] * y[2]); }

}  // namespace

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{"h6", "h14", "hA", "hA1", "hA2", "hB", "hC", "hD", "h1", "h2"};
  return names;
}

Kernel builtin_raw(std::string_view name) {
  if (name == "h6") return Kernel(2, 2, "h6", true, h6_eval, FastPath::h6);
  if (name == "h14") return Kernel(2, 3, "h14", false, h14_raw_eval);
  if (name == "hA") return Kernel(2, 2, "hA", false, hA_raw_eval, FastPath::hA);
  if (name == "hA1") return Kernel(2, 2, "hA1", false, hA1_raw_eval, FastPath::hA1);
  if (name == "hA2") return Kernel(2, 2, "hA2", false, hA2_raw_eval, FastPath::hA2);
  if (name == "hB") return Kernel(1, 2, "hB", true, pair_product, FastPath::hB);
  if (name == "hC") return Kernel(2, 1, "hC", true, pair_product, FastPath::hC);
  if (name == "hD") return Kernel(1, 1, "hD", true, single, FastPath::hD);
  if (name == "h1") return Kernel(1, 2, "h1", true, pair_product, FastPath::h1);
  if (name == "h2") return Kernel(2, 2, "h2", true, h2_eval, FastPath::h2);
  std::string valid;
  for (const auto& n : builtin_names()) valid += (valid.empty() ? "" : ", ") + n;
  fail(ErrorKind::usage, "unknown kernel '" + std::string(name) + "'; valid names: " + valid);
}

Kernel builtin(std::string_view name) {
  if (name == "h14") return Kernel(2, 3, "h14", true, h14_eval);
  return symmetrize(builtin_raw(name));
}

Kernel symmetrize_always(const Kernel& raw) {
  const std::size_t p = raw.p();
  const std::size_t q = raw.q();
  if (p > 12 || q > 12 || static_cast<double>(factorial(p)) * static_cast<double>(factorial(q)) > 1e6) {
    fail(ErrorKind::usage, "refusing to symmetrize kernel '" + raw.id() + "': p!q! exceeds 10^6 permutations");
  }
  // Precomputed source offsets for every (row perm, column perm) pair.
  std::vector<std::vector<std::size_t>> maps;
  for (const auto& rp : all_permutations(p)) {
    for (const auto& cp : all_permutations(q)) {
      std::vector<std::size_t> map(p * q);
      for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < q; ++b) map[a * q + b] = rp[a] * q + cp[b];
      maps.push_back(std::move(map));
    }
  }
  auto fn = [raw, maps = std::move(maps)](std::span<const double> y) {
    double buf[64];
    std::vector<double> heap;
    double* dst = buf;
    if (y.size() > 64) {
      heap.resize(y.size());
      dst = heap.data();
    }
    double total = 0.0;
    for (const auto& map : maps) {
      for (std::size_t t = 0; t < map.size(); ++t) dst[t] = y[map[t]];
      total += raw(std::span<const double>(dst, y.size()));
    }
    return total / static_cast<double>(maps.size());
  };
  return Kernel(p, q, raw.id(), true, std::move(fn), raw.fast_path());
}

Kernel symmetrize(const Kernel& raw) {
  if (raw.is_symmetric()) return raw;
  return symmetrize_always(raw);
}

Kernel extend(const Kernel& h, std::size_t p2, std::size_t q2) {
  if (p2 < h.p() || q2 < h.q()) {
    fail(ErrorKind::usage, "cannot extend " + std::to_string(h.p()) + "x" + std::to_string(h.q()) + " kernel '" +
                               h.id() + "' to " + std::to_string(p2) + "x" + std::to_string(q2));
  }
  if (p2 == h.p() && q2 == h.q()) return h;
  const auto row_sets = enumerate_subsets(p2, h.p());
  const auto col_sets = enumerate_subsets(q2, h.q());
  std::vector<std::vector<std::size_t>> maps;
  for (const auto& rs : row_sets) {
    for (const auto& cs : col_sets) {
      std::vector<std::size_t> map;
      for (const auto r : rs)
        for (const auto c : cs) map.push_back(r * q2 + c);
      maps.push_back(std::move(map));
    }
  }
  const std::size_t inner = h.p() * h.q();
  auto fn = [h, inner, maps = std::move(maps)](std::span<const double> y) {
    std::vector<double> buf(inner);
    double total = 0.0;
    for (const auto& map : maps) {
      for (std::size_t t = 0; t < inner; ++t) buf[t] = y[map[t]];
      total += h(buf);
    }
    return total / static_cast<double>(maps.size());
  };
  const std::string id = "ext" + std::to_string(p2) + "x" + std::to_string(q2) + "(" + h.id() + ")";
  return Kernel(p2, q2, id, h.is_symmetric(), std::move(fn));
}

double evaluate(const Kernel& h, const RowMatrix& block) {
  if (static_cast<std::size_t>(block.rows()) != h.p() || static_cast<std::size_t>(block.cols()) != h.q()) {
    fail(ErrorKind::usage, "kernel '" + h.id() + "' expects a " + std::to_string(h.p()) + "x" +
                               std::to_string(h.q()) + " block, got " + std::to_string(block.rows()) + "x" +
                               std::to_string(block.cols()));
  }
  const double v = h(std::span<const double>(block.data(), static_cast<std::size_t>(block.size())));
  if (!std::isfinite(v)) fail(ErrorKind::numeric, "kernel '" + h.id() + "' produced a non-finite value");
  return v;
}

Kernel kernel_from_json(const nlohmann::json& doc, std::string id) {
  struct Factor {
    std::size_t offset;
    int power;
  };
  struct Term {
    double coef;
    std::vector<Factor> factors;
  };
  try {
    const auto p = doc.at("p").get<std::size_t>();
    const auto q = doc.at("q").get<std::size_t>();
    if (p == 0 || q == 0) fail(ErrorKind::data, "kernel p and q must be positive");
    std::vector<Term> terms;
    for (const auto& t : doc.at("terms")) {
      Term term{t.at("coef").get<double>(), {}};
      for (const auto& f : t.at("factors")) {
        if (!f.is_array() || f.size() != 3) fail(ErrorKind::data, "kernel factor must be [i, j, power]");
        const auto i = f[0].get<long>();
        const auto j = f[1].get<long>();
        const auto power = f[2].get<int>();
        if (i < 1 || j < 1 || static_cast<std::size_t>(i) > p || static_cast<std::size_t>(j) > q)
          fail(ErrorKind::data, "kernel factor index out of the p x q block (indices are 1-based)");
        if (power < 0) fail(ErrorKind::data, "kernel factor power must be nonnegative");
        term.factors.push_back({static_cast<std::size_t>(i - 1) * q + static_cast<std::size_t>(j - 1), power});
      }
      terms.push_back(std::move(term));
    }
    auto fn = [terms = std::move(terms)](std::span<const double> y) {
      double total = 0.0;
      for (const auto& term : terms) {
        double prod = term.coef;
        for (const auto& f : term.factors) prod *= std::pow(y[f.offset], f.power);
        total += prod;
      }
      return total;
    };
    return symmetrize(Kernel(p, q, std::move(id), false, std::move(fn)));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, std::string("invalid kernel document: ") + e.what());
  }
}

Kernel resolve_kernel(const std::string& selector) {
  const auto& names = builtin_names();
  if (std::find(names.begin(), names.end(), selector) != names.end()) return builtin(selector);
  if (selector.size() > 5 && selector.substr(selector.size() - 5) == ".json") {
    std::ifstream in(selector);
    if (!in) fail(ErrorKind::data, "cannot open kernel file " + selector);
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::data, "kernel file " + selector + " is not valid JSON: " + e.what());
    }
    return kernel_from_json(doc, std::filesystem::path(selector).stem().string());
  }
  return builtin(selector);
}

}  // namespace bipnet
