#include "fk/smolyak.hpp"

#include "fk/errors.hpp"
#include "fk/kernels.hpp"
#include "fk/sampler.hpp"
#include "fk/series.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace fk {

namespace {

// ---------------------------------------------------------------------------
// 1D level scheme
// ---------------------------------------------------------------------------

int nodes_at_level(int level, int r) { return level == 0 ? 1 : r * (1 << level) + 1; }

int new_count(int level, int r) {
    if (level == 0) return 1;
    if (level == 1) return 2 * r;
    return r * (1 << (level - 1));
}

double node_coord(int level, int idx, int r, double L) {
    if (level == 0) return 0.0;
    double sigma = 2.0 * L / (r * (1 << level));
    return -L + idx * sigma;
}

// Global node index of the p-th new node at this level.
int new_global_index(int level, int p, int r) {
    if (level == 0) return 0;
    if (level == 1) return p < r ? p : p + 1;  // center node r is inherited
    return 2 * p + 1;
}

// Position of node idx in the new-node list, or -1 if inherited.
int new_position(int level, int idx, int r) {
    if (level == 0) return idx == 0 ? 0 : -1;
    if (level == 1) {
        if (idx == r) return -1;
        return idx < r ? idx : idx - 1;
    }
    return (idx % 2 == 1) ? (idx - 1) / 2 : -1;
}

struct PairEntry {
    int pos;
    double val;
};

struct PairList {
    int count = 0;
    PairEntry e[8];
};

// Nonzero plain Lagrange basis values at x restricted to NEW nodes of the
// level. The construction interpolates h/w in these bases; the class weight
// w is applied once per evaluation point, never per node, so no coarse-level
// inverse-weight blowup can occur.
void collect_pairs(double x, int level, int r, double L, PairList& out) {
    out.count = 0;
    if (x < -L || x > L) return;
    if (level == 0) {
        out.e[out.count++] = {0, 1.0};
        return;
    }
    int cells = 1 << level;
    double h = 2.0 * L / cells;
    int cell = static_cast<int>((x + L) / h);
    if (cell >= cells) cell = cells - 1;
    if (cell < 0) cell = 0;
    int base = cell * r;
    for (int j = base; j <= base + r; ++j) {
        int p = new_position(level, j, r);
        if (p < 0) continue;
        double xj = node_coord(level, j, r, L);
        double lag = 1.0;
        for (int i = base; i <= base + r; ++i) {
            if (i == j) continue;
            double xi = node_coord(level, i, r, L);
            lag *= (x - xi) / (xj - xi);
        }
        if (lag == 0.0) continue;
        out.e[out.count++] = {p, lag};
    }
}

// Unit-ball per-dimension error bound of the level; shape C * 2^{-r l}.
double level_error_bound(int level, int r, double L, const FunctionClassTag& tag) {
    double tail = tag.kind == ClassKind::WeightedSobolevGaussian ? std::exp(-L * L) : 0.0;
    if (level == 0) return 2.0 + tail;
    double h = 2.0 * L / (1 << level);
    double c = std::pow(2.0, 2 - r);
    return std::min(2.0, c * std::pow(0.5 * h, r)) + tail;
}

// Smallest q whose tensor tail bound meets eps, from the per-dimension
// class bounds (used only as a cap on the empirical escalation).
int class_level_cap(double eps, int dims, int r, double L, const FunctionClassTag& tag,
                    int max_level) {
    constexpr int kSMax = 96;
    std::vector<double> dhat(max_level + 1);
    for (int l = 0; l <= max_level; ++l) {
        double d0 = level_error_bound(l, r, L, tag);
        double dm1 = l == 0 ? 0.0 : level_error_bound(l - 1, r, L, tag);
        dhat[l] = l == 0 ? 1.0 : d0 + dm1;
    }
    std::vector<double> conv{1.0};  // conv über 0 dims
    for (int dim = 0; dim < dims; ++dim) {
        std::vector<double> next(std::min<std::size_t>(kSMax + 1, conv.size() + max_level), 0.0);
        for (std::size_t s = 0; s < conv.size(); ++s)
            for (int l = 0; l <= max_level && s + l < next.size(); ++l)
                next[s + l] += conv[s] * dhat[l];
        conv = std::move(next);
    }
    double total = 0.0;
    for (double v : conv) total += v;
    double suffix = total;
    for (int q = 0; q < static_cast<int>(conv.size()); ++q) {
        suffix -= conv[q];
        if (suffix <= eps) return q;
    }
    return 40;
}

struct KeyHash {
    std::size_t operator()(const std::vector<std::uint32_t>& v) const {
        std::uint64_t h = 1469598103934665603ULL;
        for (std::uint32_t x : v) {
            h ^= x;
            h *= 1099511628211ULL;
        }
        return static_cast<std::size_t>(h);
    }
};

std::uint64_t fnv64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Deterministic probe points: 70% per-coordinate truncated normals with
// sd = L/3 and 30% uniform over the box. Independent of the solve seed.
std::vector<double> make_probe_points(int n, int dims, double L, std::uint64_t salt) {
    std::vector<double> pts(static_cast<std::size_t>(n) * dims);
    RngStream base = make_stream(0x70B5u ^ salt, stream_purpose::probes, dims, salt);
    for (int i = 0; i < n; ++i) {
        RngSequence seq(base.substream(i));
        bool uniform = (i % 10) >= 7;
        for (int c = 0; c < dims; ++c) {
            double x;
            if (uniform) {
                x = (2.0 * seq.next_uniform() - 1.0) * L;
            } else {
                x = seq.next_normal() * (L / 3.0);
                for (int tries = 0; std::abs(x) > L && tries < 32; ++tries)
                    x = seq.next_normal() * (L / 3.0);
                if (std::abs(x) > L) x = 0.0;
            }
            pts[static_cast<std::size_t>(i) * dims + c] = x;
        }
    }
    return pts;
}

} // namespace

// ---------------------------------------------------------------------------
// Level1DOperator
// ---------------------------------------------------------------------------

double Level1DOperator::basis(int j, double x) const {
    if (x < -L || x > L) return 0.0;
    double wx = class_weight_1d(tag, x);
    if (level == 0) return j == 0 ? wx : 0.0;
    int cells = n_cells();
    double h = cell_width();
    int cell = static_cast<int>((x + L) / h);
    if (cell >= cells) cell = cells - 1;
    if (cell < 0) cell = 0;
    int base = cell * degree_r;
    if (j < base || j > base + degree_r) return 0.0;
    double xj = nodes[j];
    double lag = 1.0;
    for (int i = base; i <= base + degree_r; ++i) {
        if (i == j) continue;
        lag *= (x - nodes[i]) / (xj - nodes[i]);
    }
    return lag * wx / class_weight_1d(tag, xj);
}

Level1DOperator build_1d_operator(int level, const FunctionClassTag& tag,
                                  const ClassParams& params) {
    if (level < 0) throw std::invalid_argument("build_1d_operator: level >= 0 required");
    Level1DOperator op;
    op.level = level;
    op.degree_r = std::max(1, params.smoothness_r);
    op.L = tag.domain_halfwidth_L;
    op.tag = tag;
    int n = nodes_at_level(level, op.degree_r);
    op.nodes.resize(n);
    for (int i = 0; i < n; ++i) op.nodes[i] = node_coord(level, i, op.degree_r, op.L);
    op.error_bound = level_error_bound(level, op.degree_r, op.L, tag);
    return op;
}

// ---------------------------------------------------------------------------
// SparseApprox evaluation
// ---------------------------------------------------------------------------

namespace {

// Evaluates the raw (unweighted) contribution of each term at a point;
// calls sink(term_index, entry_offset + flat_index, lagrange_product) for
// every nonzero basis product. Callers fold in the class weight w(z).
template <typename Sink>
void for_each_entry_value(std::span<const SurplusTerm> terms, int dims, int r, double L,
                          int max_level, std::span<const double> z, Sink&& sink) {
    for (double x : z)
        if (x < -L || x > L) return;  // approximant vanishes outside the box

    // pair lists per (dim, level)
    thread_local std::vector<PairList> pl;
    pl.assign(static_cast<std::size_t>(dims) * (max_level + 1), PairList{});
    for (int c = 0; c < dims; ++c)
        for (int l = 0; l <= max_level; ++l)
            collect_pairs(z[c], l, r, L, pl[static_cast<std::size_t>(c) * (max_level + 1) + l]);

    std::size_t offset = 0;
    std::vector<int> idx(dims);
    for (std::size_t ti = 0; ti < terms.size(); ++ti) {
        const SurplusTerm& term = terms[ti];
        std::size_t n_ent = term.surplus.size();
        bool live = true;
        for (int c = 0; c < dims; ++c) {
            if (pl[static_cast<std::size_t>(c) * (max_level + 1) + term.levels[c]].count == 0) {
                live = false;
                break;
            }
        }
        if (live) {
            std::fill(idx.begin(), idx.end(), 0);
            for (;;) {
                double val = 1.0;
                std::size_t flat = 0;
                for (int c = 0; c < dims; ++c) {
                    const PairList& p =
                        pl[static_cast<std::size_t>(c) * (max_level + 1) + term.levels[c]];
                    val *= p.e[idx[c]].val;
                    flat += static_cast<std::size_t>(p.e[idx[c]].pos) * term.strides[c];
                }
                sink(ti, offset + flat, val);
                int c = 0;
                for (; c < dims; ++c) {
                    const PairList& p =
                        pl[static_cast<std::size_t>(c) * (max_level + 1) + term.levels[c]];
                    if (++idx[c] < p.count) break;
                    idx[c] = 0;
                }
                if (c == dims) break;
            }
        }
        offset += n_ent;
    }
}

int max_term_level(std::span<const SurplusTerm> terms) {
    int m = 0;
    for (const auto& t : terms)
        for (int l : t.levels) m = std::max(m, l);
    return m;
}

// Raw interpolant of h/w (no weight factor).
double eval_raw(std::span<const SurplusTerm> terms, int dims, int r, double L,
                std::span<const double> z, std::span<const double> flat_surplus) {
    if (terms.empty()) return 0.0;
    double acc = 0.0;
    for_each_entry_value(terms, dims, r, L, max_term_level(terms), z,
                         [&](std::size_t, std::size_t e, double val) {
                             acc += flat_surplus[e] * val;
                         });
    return acc;
}

} // namespace

double SparseApprox::eval(std::span<const double> points) const {
    if (zero || terms.empty()) return 0.0;
    double raw = eval_raw(terms, (k + 1) * d, r, tag.domain_halfwidth_L, points,
                          coefficients);
    return raw == 0.0 ? 0.0 : class_weight(tag, points) * raw;
}

double eval_sparse(const SparseApprox& approx, std::span<const double> points) {
    return approx.eval(points);
}

double SparseApprox::cv_integral() const {
    if (zero || n_entries == 0) return 0.0;
    return kernels::dot(coefficients.data(), cv_weights.data(), n_entries);
}

double SparseApprox::cv_error_bound() const {
    if (zero || n_entries == 0 || !cv_filled) return 0.0;
    double s = 0.0, q2 = 0.0;
    kernels::sum_sumsq(coefficients.data(), n_entries, s, q2);
    return cv_precision * std::sqrt(q2);
}

std::string SparseApprox::cache_key(double t) const {
    std::ostringstream os;
    os << "FKCV|kind=" << (tag.kind == ClassKind::WeightedSobolevGaussian ? "gauss" : "custom")
       << "|L=" << tag.domain_halfwidth_L << "|r=" << r << "|d=" << d << "|k=" << k
       << "|t=" << t << "|eps=" << eps << "|q=" << q << "|n=" << n_entries << "|lv=";
    std::uint64_t lh = 1469598103934665603ULL;
    for (const auto& term : terms) {
        for (int l : term.levels) {
            lh ^= static_cast<std::uint64_t>(l) + 0x9e37;
            lh *= 1099511628211ULL;
        }
        lh ^= term.surplus.size();
        lh *= 1099511628211ULL;
    }
    os << std::hex << lh;
    return os.str();
}

// ---------------------------------------------------------------------------
// Builder
// ---------------------------------------------------------------------------

struct SparseBuilder {
    const TensorField& h;
    FunctionClassTag tag;
    ClassParams params;
    BuildOptions opts;
    int k, d, dims, r;
    double L;
    double target_abs;
    SparseApprox ap;

    std::unordered_map<std::vector<std::uint32_t>, double, KeyHash> memo;
    std::vector<double> probes;
    std::vector<double> h_at_probes;
    std::size_t total_entries = 0;

    SparseBuilder(const TensorField& hh, double eps, int kk, int dd,
                  const FunctionClassTag& tg, const ClassParams& pr, const BuildOptions& op)
        : h(hh), tag(tg), params(pr), opts(op), k(kk), d(dd), dims((kk + 1) * dd),
          r(std::max(1, pr.smoothness_r)), L(tg.domain_halfwidth_L) {
        target_abs = eps * pr.beta1 * std::pow(pr.beta2, kk);
        ap.eps = eps;
        ap.k = kk;
        ap.d = dd;
        ap.r = r;
        ap.tag = tg;
        ap.beta_scale = pr.beta1 * std::pow(pr.beta2, kk);
    }

    void init_probes() {
        std::uint64_t salt = fnv64("probes") ^ static_cast<std::uint64_t>(dims * 131 + r);
        probes = make_probe_points(opts.probe_count, dims, L, salt);
        h_at_probes.resize(opts.probe_count);
        for (int i = 0; i < opts.probe_count; ++i) {
            std::span<const double> z(probes.data() + static_cast<std::size_t>(i) * dims, dims);
            double v = h(z);
            if (!std::isfinite(v))
                throw InvalidInputFunction("invalid input function: non-finite h at probe point");
            h_at_probes[i] = v;
        }
    }

    // Memoized value of fbar = h / w at a grid node. The key is the node's
    // index on the reference grid of max_level_1d, so a node shared between
    // levels is evaluated once. The level-0 node sits at the box center.
    double fbar_memoized(std::span<const double> coords, const std::vector<int>& levels,
                         const std::vector<int>& gidx) {
        std::vector<std::uint32_t> key(dims);
        for (int c = 0; c < dims; ++c) {
            if (levels[c] == 0) {
                key[c] = static_cast<std::uint32_t>(r) << (opts.max_level_1d - 1);
            } else {
                int shift = opts.max_level_1d - levels[c];
                key[c] = static_cast<std::uint32_t>(gidx[c]) << shift;
            }
        }
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        double w = class_weight(tag, coords);
        double v;
        if (w < 1e-300) {
            // the weighted contribution of such a node is below double noise
            v = 0.0;
        } else {
            double hv = h(coords);
            if (!std::isfinite(hv))
                throw InvalidInputFunction("invalid input function: non-finite h at grid node");
            v = hv / w;
        }
        memo.emplace(std::move(key), v);
        return v;
    }

    void add_term(const std::vector<int>& levels) {
        SurplusTerm term;
        term.levels = levels;
        term.strides.resize(dims);
        std::size_t n_ent = 1;
        for (int c = 0; c < dims; ++c) {
            term.strides[c] = static_cast<int>(n_ent);
            n_ent *= static_cast<std::size_t>(new_count(levels[c], r));
        }
        total_entries += n_ent;
        if (total_entries > opts.node_budget)
            throw SparseGridBudgetExceeded("sparse grid budget exceeded: more than " +
                                           std::to_string(opts.node_budget) +
                                           " entries requested");
        term.surplus.resize(n_ent);

        std::vector<int> pos(dims, 0), gidx(dims);
        std::vector<double> coords(dims);
        for (std::size_t flat = 0; flat < n_ent; ++flat) {
            for (int c = 0; c < dims; ++c) {
                gidx[c] = new_global_index(levels[c], pos[c], r);
                coords[c] = node_coord(levels[c], gidx[c], r, L);
            }
            double fv = fbar_memoized(coords, levels, gidx);
            double uv = eval_raw(ap.terms, dims, r, L, coords, flat_surplus_view());
            term.surplus[flat] = fv - uv;
            int c = 0;
            for (; c < dims; ++c) {
                if (++pos[c] < new_count(levels[c], r)) break;
                pos[c] = 0;
            }
        }
        flat_cache_.insert(flat_cache_.end(), term.surplus.begin(), term.surplus.end());
        ap.terms.push_back(std::move(term));
    }

    // flat surplus array kept in sync with ap.terms for partial evaluation
    std::vector<double> flat_cache_;
    std::span<const double> flat_surplus_view() const { return flat_cache_; }

    void add_shell(int s) {
        std::vector<int> levels(dims, 0);
        rec_shell(s, 0, levels);
    }

    void rec_shell(int remaining, int dim, std::vector<int>& levels) {
        if (dim == dims - 1) {
            if (remaining <= opts.max_level_1d) {
                levels[dim] = remaining;
                add_term(levels);
            }
            return;
        }
        int cap = std::min(remaining, opts.max_level_1d);
        for (int l = 0; l <= cap; ++l) {
            levels[dim] = l;
            rec_shell(remaining - l, dim + 1, levels);
        }
        levels[dim] = 0;
    }

    double measure_probe_error(bool track_term_max) {
        if (track_term_max)
            for (auto& term : ap.terms) term.probe_max = 0.0;
        double worst = 0.0;
        int ml = max_term_level(ap.terms);
        std::vector<double> term_contrib(ap.terms.size());
        for (int i = 0; i < opts.probe_count; ++i) {
            std::span<const double> z(probes.data() + static_cast<std::size_t>(i) * dims, dims);
            double wz = class_weight(tag, z);
            double acc = 0.0;
            if (track_term_max) {
                std::fill(term_contrib.begin(), term_contrib.end(), 0.0);
                for_each_entry_value(ap.terms, dims, r, L, ml, z,
                                     [&](std::size_t ti, std::size_t e, double val) {
                                         double c = flat_cache_[e] * val;
                                         acc += c;
                                         term_contrib[ti] += c;
                                     });
                for (std::size_t ti = 0; ti < ap.terms.size(); ++ti)
                    ap.terms[ti].probe_max =
                        std::max(ap.terms[ti].probe_max, wz * std::abs(term_contrib[ti]));
            } else {
                acc = eval_raw(ap.terms, dims, r, L, z, flat_cache_);
            }
            worst = std::max(worst, std::abs(h_at_probes[i] - wz * acc));
        }
        return worst;
    }

    void prune() {
        if (opts.prune_tol_frac <= 0.0 || ap.terms.size() <= 1) return;
        double tol = opts.prune_tol_frac * target_abs;
        double budget = 0.1 * target_abs;
        // smallest contributions first, root term always kept
        std::vector<std::size_t> order(ap.terms.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return ap.terms[a].probe_max < ap.terms[b].probe_max;
        });
        std::vector<bool> drop(ap.terms.size(), false);
        double dropped_mass = 0.0;
        for (std::size_t oi : order) {
            if (oi == 0) continue;
            double c = ap.terms[oi].probe_max;
            if (c <= tol && dropped_mass + c <= budget) {
                drop[oi] = true;
                dropped_mass += c;
            }
        }
        if (dropped_mass == 0.0) return;
        std::vector<SurplusTerm> kept;
        kept.reserve(ap.terms.size());
        for (std::size_t i = 0; i < ap.terms.size(); ++i)
            if (!drop[i]) kept.push_back(std::move(ap.terms[i]));
        ap.terms = std::move(kept);
        ap.prune_error = dropped_mass;
        flat_cache_.clear();
        for (const auto& term : ap.terms)
            flat_cache_.insert(flat_cache_.end(), term.surplus.begin(), term.surplus.end());
    }

    void finalize() {
        ap.n_entries = flat_cache_.size();
        ap.coefficients = flat_cache_;
        ap.cv_weights.assign(ap.n_entries, 0.0);
        ap.node_tuples.resize(ap.n_entries * static_cast<std::size_t>(dims));
        std::size_t e = 0;
        for (const auto& term : ap.terms) {
            std::size_t n_ent = term.surplus.size();
            std::vector<int> pos(dims, 0);
            for (std::size_t flat = 0; flat < n_ent; ++flat, ++e) {
                for (int c = 0; c < dims; ++c) {
                    int gi = new_global_index(term.levels[c], pos[c], r);
                    ap.node_tuples[e * dims + c] = node_coord(term.levels[c], gi, r, L);
                }
                int c = 0;
                for (; c < dims; ++c) {
                    if (++pos[c] < new_count(term.levels[c], r)) break;
                    pos[c] = 0;
                }
            }
        }
        ap.n_nodes = memo.size();
    }

    SparseApprox build() {
        init_probes();

        // Zero algorithm: the trivial approximant already meets the contract.
        double K = params.embed_K;
        if (ap.eps >= std::pow(K, k + 1)) {
            ap.zero = true;
            ap.q = -1;
            double worst = 0.0;
            for (double hv : h_at_probes) worst = std::max(worst, std::abs(hv));
            ap.probe_error = worst;
            ap.certified = worst <= target_abs;
            ap.n_nodes = 0;
            ap.n_entries = 0;
            return std::move(ap);
        }

        int q_cap = class_level_cap(ap.eps, dims, r, L, tag, opts.max_level_1d) +
                    opts.max_extra_levels;
        q_cap = std::min(q_cap, dims * opts.max_level_1d);

        int q = 0;
        add_shell(0);
        for (;;) {
            double err = measure_probe_error(false);
            ap.probe_error = err;
            if (err <= opts.target_margin * target_abs) {
                ap.certified = true;
                break;
            }
            if (q >= q_cap) {
                ap.certified = false;
                break;
            }
            ++q;
            add_shell(q);
        }
        ap.q = q;

        measure_probe_error(true);  // record per-term maxima for pruning
        prune();
        ap.probe_error = measure_probe_error(false);
        finalize();
        return std::move(ap);
    }
};

SparseApprox build_sparse(const TensorField& h, double eps, int k, int d,
                          const FunctionClassTag& tag, const ClassParams& params,
                          const BuildOptions& opts) {
    if (eps <= 0.0) throw std::invalid_argument("build_sparse: eps > 0 required");
    if (k < 0 || d < 1) throw std::invalid_argument("build_sparse: bad k or d");
    SparseBuilder b(h, eps, k, d, tag, params, opts);
    return b.build();
}

double measure_sup_error(const SparseApprox& approx, const TensorField& h,
                         int probe_count, std::uint64_t salt) {
    int dims = (approx.k + 1) * approx.d;
    auto pts = make_probe_points(probe_count, dims, approx.tag.domain_halfwidth_L,
                                 0xACC3u + salt);
    double worst = 0.0;
    for (int i = 0; i < probe_count; ++i) {
        std::span<const double> z(pts.data() + static_cast<std::size_t>(i) * dims, dims);
        worst = std::max(worst, std::abs(h(z) - approx.eval(z)));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Control-variate weights
// ---------------------------------------------------------------------------

namespace {

constexpr char kCacheMagic[5] = {'F', 'K', 'C', 'V', '1'};

std::filesystem::path cache_path(const std::string& dir, std::uint64_t key_hash) {
    char name[32];
    std::snprintf(name, sizeof name, "fkcv_%016llx.bin",
                  static_cast<unsigned long long>(key_hash));
    return std::filesystem::path(dir) / name;
}

bool load_cache(const std::filesystem::path& p, std::uint64_t key_hash,
                std::vector<double>& weights, bool& corrupt) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return false;
    char magic[5];
    std::uint64_t stored = 0;
    in.read(magic, 5);
    in.read(reinterpret_cast<char*>(&stored), 8);
    if (!in || std::memcmp(magic, kCacheMagic, 5) != 0 || stored != key_hash) {
        corrupt = true;
        return false;
    }
    in.read(reinterpret_cast<char*>(weights.data()),
            static_cast<std::streamsize>(weights.size() * sizeof(double)));
    if (!in || in.gcount() != static_cast<std::streamsize>(weights.size() * sizeof(double))) {
        corrupt = true;
        return false;
    }
    // exactly at EOF?
    char extra;
    in.read(&extra, 1);
    if (!in.eof()) {
        corrupt = true;
        return false;
    }
    return true;
}

void save_cache(const std::filesystem::path& p, std::uint64_t key_hash,
                const std::vector<double>& weights) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    auto tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) return;
        out.write(kCacheMagic, 5);
        out.write(reinterpret_cast<const char*>(&key_hash), 8);
        out.write(reinterpret_cast<const char*>(weights.data()),
                  static_cast<std::streamsize>(weights.size() * sizeof(double)));
    }
    std::filesystem::rename(tmp, p, ec);
}

} // namespace

PrecomputeStats precompute_cv_weights(SparseApprox& approx, double t,
                                      const PrecomputeOptions& opts) {
    PrecomputeStats stats;
    double g = g_l1_norm(approx.k, t);
    double precision = opts.precision > 0.0
                           ? opts.precision
                           : approx.eps * approx.beta_scale * g / 10.0;
    approx.cv_precision = precision;
    if (approx.zero || approx.n_entries == 0) {
        approx.cv_filled = true;
        return stats;
    }

    std::string key = approx.cache_key(t) + "|prec=" + std::to_string(precision);
    std::uint64_t key_hash = fnv64(key);

    if (!opts.cache_dir.empty()) {
        bool corrupt = false;
        std::vector<double> weights(approx.n_entries);
        auto p = cache_path(opts.cache_dir, key_hash);
        if (load_cache(p, key_hash, weights, corrupt)) {
            approx.cv_weights = std::move(weights);
            approx.cv_filled = true;
            approx.cv_samples = 0;
            stats.cache_hit = true;
            return stats;
        }
        if (corrupt) {
            std::fprintf(stderr, "[fk] warning: corrupt precompute cache %s, recomputing\n",
                         p.string().c_str());
            stats.cache_corrupt = true;
        }
    }

    const int dims = (approx.k + 1) * approx.d;
    const int ml = max_term_level(approx.terms);
    const std::size_t n_ent = approx.n_entries;
    std::vector<double> acc(n_ent, 0.0), acc2(n_ent, 0.0);
    double aggA = 0.0, aggA2 = 0.0;

    RngStream base = make_stream(key_hash, stream_purpose::cv_precompute, approx.k, 0);
    double agg_target = approx.eps * approx.beta_scale * g / 10.0;

    std::uint64_t n = 0;
    std::uint64_t next = 4096;
    bool met = false;
    while (!met && n < opts.max_samples) {
        next = std::min<std::uint64_t>(next, opts.max_samples);
        for (std::uint64_t i = n; i < next; ++i) {
            PathSample s = sample_path(approx.k, t, approx.d, base.substream(i));
            double wz = class_weight(approx.tag, s.points);
            double A = 0.0;
            for_each_entry_value(approx.terms, dims, approx.r,
                                 approx.tag.domain_halfwidth_L, ml, s.points,
                                 [&](std::size_t, std::size_t e, double raw) {
                                     double val = wz * raw;  // zeta includes the weight
                                     acc[e] += val;
                                     acc2[e] += val * val;
                                     A += approx.coefficients[e] * val;
                                 });
            aggA += A;
            aggA2 += A * A;
        }
        n = next;
        next = n * 2;

        double nn = static_cast<double>(n);
        double worst = 0.0;
        for (std::size_t e = 0; e < n_ent; ++e) {
            double m = acc[e] / nn;
            double var = (acc2[e] - nn * m * m) / (nn - 1.0);
            if (var < 0.0) var = 0.0;
            worst = std::max(worst, g * std::sqrt(var / nn));
        }
        double mA = aggA / nn;
        double varA = (aggA2 - nn * mA * mA) / (nn - 1.0);
        if (varA < 0.0) varA = 0.0;
        double agg_se = g * std::sqrt(varA / nn);
        met = worst <= precision && agg_se <= agg_target;
        approx.cv_aggregate_stderr = agg_se;
    }

    double nn = static_cast<double>(n);
    for (std::size_t e = 0; e < n_ent; ++e) approx.cv_weights[e] = g * acc[e] / nn;
    approx.cv_filled = true;
    approx.cv_samples = n;
    stats.samples_used = n;
    stats.precision_met = met;
    if (!met)
        std::fprintf(stderr,
                     "[fk] warning: cv precompute sample cap reached before precision target\n");

    if (!opts.cache_dir.empty())
        save_cache(cache_path(opts.cache_dir, key_hash), key_hash, approx.cv_weights);
    return stats;
}

} // namespace fk
