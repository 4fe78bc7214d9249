#include "gridcast/train.hpp"

#ifdef GRIDCAST_FLOW_HEADERS_INCLUDED
#error "influence training must not depend on the power-flow solver"
#endif

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "gridcast/log.hpp"
#include "gridcast/parallel.hpp"

namespace gridcast {

namespace {

constexpr int kNeverFails = std::numeric_limits<int>::max() / 4;

// First failure step per branch, or kNeverFails.
std::vector<int> failure_steps(const CascadeSample& s) {
    const int m = static_cast<int>(s.states[0].size());
    std::vector<int> fail(m, kNeverFails);
    for (int b = 0; b < m; ++b) {
        const int step = s.failure_step(b);
        if (step > 0) fail[b] = step;
    }
    return fail;
}

Matrix ratio_matrix(const std::vector<int64_t>& num, const std::vector<int64_t>& den,
                    std::size_t rows, std::size_t cols, double fallback) {
    Matrix out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t idx = r * cols + c;
            out(r, c) = den[idx] > 0 ? static_cast<double>(num[idx]) / static_cast<double>(den[idx])
                                     : fallback;
        }
    return out;
}

}  // namespace

std::pair<Matrix, Matrix> estimate_A(const SamplePool& pool) {
    const auto training = pool.training_samples();
    if (training.empty()) throw std::invalid_argument("estimate_A: empty training split");
    const int m = pool.n_branches();
    const std::size_t mm = static_cast<std::size_t>(m) * m;
    std::vector<int64_t> c11(mm, 0), c1(mm, 0), c01(mm, 0), c0(mm, 0);

    // Counting runs in O(N_br^2) per sample: with monotone states every
    // count is a closed form of the two failure steps, so each matrix
    // entry costs O(1) regardless of the cascade length.
    for (const CascadeSample* s : training) {
        const int t_end = s->termination_time;
        const auto fail = failure_steps(*s);
        for (int i = 0; i < m; ++i) {
            const int tau = std::min(fail[i], t_end);  // last counted step + 1
            if (tau <= 1) continue;
            const int pairs = tau - 1;
            const int alive_next_cap = std::min(tau - 1, fail[i] - 2);
            for (int j = 0; j < m; ++j) {
                const std::size_t idx = static_cast<std::size_t>(j) * m + i;
                const int j_alive = std::max(0, std::min(pairs, fail[j] - 1));
                c1[idx] += j_alive;
                c0[idx] += pairs - j_alive;
                c11[idx] += std::max(0, std::min(alive_next_cap, fail[j] - 1));
                c01[idx] += std::max(0, std::min(pairs, alive_next_cap) - fail[j] + 1);
            }
        }
    }
    return {ratio_matrix(c11, c1, m, m, kDefaultAliveProb),
            ratio_matrix(c01, c0, m, m, kDefaultDeadProb)};
}

std::pair<Matrix, Matrix> estimate_B(const SamplePool& pool) {
    const auto training = pool.training_samples();
    if (training.empty()) throw std::invalid_argument("estimate_B: empty training split");
    const int m = pool.n_branches();
    const int n = pool.n_buses();
    if (n == 0)
        throw std::invalid_argument("estimate_B: pool carries no service observations");
    const std::size_t mn = static_cast<std::size_t>(m) * n;
    std::vector<int64_t> f11(mn, 0), f01(mn, 0), f1(mn, 0), f0(mn, 0);

    for (const CascadeSample* s : training) {
        for (std::size_t t = 0; t < s->load_served.size(); ++t) {
            const auto& state = s->states[t];
            const auto& served = s->load_served[t];
            for (int j = 0; j < m; ++j) {
                const bool alive = state[j] != 0;
                const std::size_t row = static_cast<std::size_t>(j) * n;
                for (int i = 0; i < n; ++i) {
                    if (alive) {
                        ++f1[row + i];
                        if (served[i]) ++f11[row + i];
                    } else {
                        ++f0[row + i];
                        if (served[i]) ++f01[row + i];
                    }
                }
            }
        }
    }
    return {ratio_matrix(f11, f1, m, n, kDefaultAliveProb),
            ratio_matrix(f01, f0, m, n, kDefaultDeadProb)};
}

double SimplexQuadratic::value(const std::vector<double>& w) const {
    const auto gw = matvec(gram, w);
    double quad = 0.0, lin = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        quad += w[i] * gw[i];
        lin += cross[i] * w[i];
    }
    return scale * (quad - 2.0 * lin + target_sq);
}

std::vector<double> SimplexQuadratic::gradient(const std::vector<double>& w) const {
    auto g = matvec(gram, w);
    for (std::size_t i = 0; i < w.size(); ++i) g[i] = scale * 2.0 * (g[i] - cross[i]);
    return g;
}

namespace {

SimplexQuadratic accumulate_problem(const std::vector<const CascadeSample*>& training, int dim,
                                    const std::function<void(const CascadeSample&, std::size_t,
                                                             std::vector<double>&, double&)>& row_fn) {
    SimplexQuadratic q;
    q.gram = Matrix(dim, dim);
    q.cross.assign(dim, 0.0);
    q.scale = 1.0 / static_cast<double>(training.size());
    std::vector<double> m(dim);
    for (const CascadeSample* s : training) {
        for (std::size_t t = 0; t + 1 < s->states.size(); ++t) {
            double y = 0.0;
            row_fn(*s, t, m, y);
            for (int a = 0; a < dim; ++a) {
                const double ma = m[a];
                if (ma == 0.0) continue;
                q.cross[a] += y * ma;
                for (int b = a; b < dim; ++b) q.gram(a, b) += ma * m[b];
            }
            q.target_sq += y * y;
        }
    }
    // Mirror the upper triangle.
    for (int a = 0; a < dim; ++a)
        for (int b = a + 1; b < dim; ++b) q.gram(b, a) = q.gram(a, b);
    return q;
}

}  // namespace

SimplexQuadratic link_fit_problem(const SamplePool& pool, const Matrix& a11, const Matrix& a01,
                                  int link) {
    const int m = pool.n_branches();
    return accumulate_problem(pool.training_samples(), m,
                              [&](const CascadeSample& s, std::size_t t, std::vector<double>& row,
                                  double& y) {
                                  const auto& state = s.states[t];
                                  for (int j = 0; j < m; ++j)
                                      row[j] = state[j] ? a11(j, link) : a01(j, link);
                                  y = s.states[t + 1][link] ? 1.0 : 0.0;
                              });
}

SimplexQuadratic shed_fit_problem(const SamplePool& pool, const Matrix& b11, const Matrix& b01,
                                  int bus) {
    const int m = pool.n_branches();
    return accumulate_problem(pool.training_samples(), m,
                              [&](const CascadeSample& s, std::size_t t, std::vector<double>& row,
                                  double& y) {
                                  const auto& state = s.states[t];
                                  for (int j = 0; j < m; ++j)
                                      row[j] = state[j] ? b11(j, bus) : b01(j, bus);
                                  y = s.load_served[t][bus] ? 1.0 : 0.0;
                              });
}

std::vector<double> project_simplex(std::vector<double> v) {
    std::vector<double> u = v;
    std::sort(u.begin(), u.end(), std::greater<>());
    double running = 0.0;
    double theta = 0.0;
    int rho = 0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        running += u[k];
        const double candidate = (running - 1.0) / static_cast<double>(k + 1);
        if (u[k] - candidate > 0) {
            rho = static_cast<int>(k + 1);
            theta = candidate;
        }
    }
    (void)rho;
    for (auto& x : v) x = std::max(0.0, x - theta);
    return v;
}

std::pair<std::vector<double>, bool> minimize_on_simplex(const SimplexQuadratic& q,
                                                         std::size_t dim,
                                                         const SimplexFitOptions& opts,
                                                         std::vector<double> init) {
    if (dim == 0) throw std::invalid_argument("minimize_on_simplex: empty simplex");
    if (dim == 1) return {{1.0}, true};
    std::vector<double> w = init.empty() ? std::vector<double>(dim, 1.0 / static_cast<double>(dim))
                                         : project_simplex(std::move(init));
    double f = q.value(w);
    double step = 1.0;
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        const auto g = q.gradient(w);
        bool accepted = false;
        std::vector<double> w_next;
        double f_next = f;
        double trial = step;
        for (int backtrack = 0; backtrack < 60; ++backtrack) {
            std::vector<double> cand(dim);
            for (std::size_t i = 0; i < dim; ++i) cand[i] = w[i] - trial * g[i];
            cand = project_simplex(std::move(cand));
            // g . (w - cand) >= 0 always; zero means w is a fixed point of
            // the projected step, i.e. a constrained stationary point.
            double along = 0.0;
            for (std::size_t i = 0; i < dim; ++i) along += g[i] * (w[i] - cand[i]);
            if (along <= 1e-15) return {w, true};
            const double fc = q.value(cand);
            // Armijo sufficient decrease; plain non-increase can stall on a
            // symmetric overshoot with an equal objective.
            if (fc <= f - 1e-4 * along) {
                w_next = std::move(cand);
                f_next = fc;
                accepted = true;
                break;
            }
            trial *= 0.5;
        }
        if (!accepted) return {w, true};  // no descent direction left
        const double decrease = f - f_next;
        w = std::move(w_next);
        f = f_next;
        step = trial * 2.0;
        if (decrease < opts.convergence_decrease) return {w, true};
    }
    return {w, false};
}

namespace {

SimplexFitResult fit_rows(std::size_t rows, std::size_t dim, const SimplexFitOptions& opts,
                          const std::function<SimplexQuadratic(std::size_t)>& problem_fn,
                          const char* what, bool self_init, unsigned threads = 0) {
    SimplexFitResult result;
    result.weights = Matrix(rows, dim);
    result.objectives.assign(rows, 0.0);
    std::vector<char> ok(rows, 1);
    parallel_for(rows, [&](std::size_t r) {
        const SimplexQuadratic q = problem_fn(r);
        // Link rows start from pure self-influence: with no evidence of
        // cross excitation a link is taken to influence only itself, and
        // the data moves mass off the diagonal only where transitions
        // support it.
        std::vector<double> init;
        if (self_init && r < dim) {
            init.assign(dim, 0.0);
            init[r] = 1.0;
        }
        auto [w, converged] = minimize_on_simplex(q, dim, opts, std::move(init));
        for (std::size_t c = 0; c < dim; ++c) result.weights(r, c) = w[c];
        result.objectives[r] = q.value(w);
        ok[r] = converged ? 1 : 0;
    }, threads);
    for (std::size_t r = 0; r < rows; ++r)
        if (!ok[r]) {
            result.converged = false;
            log_warn("%s: subproblem %zu returned best iterate without convergence", what, r);
        }
    return result;
}

}  // namespace

SimplexFitResult fit_D(const SamplePool& pool, const Matrix& a11, const Matrix& a01,
                       const SimplexFitOptions& opts) {
    const std::size_t m = a11.rows();
    return fit_rows(m, m, opts,
                    [&](std::size_t i) { return link_fit_problem(pool, a11, a01, static_cast<int>(i)); },
                    "fit_D", /*self_init=*/true);
}

SimplexFitResult fit_E(const SamplePool& pool, const Matrix& b11, const Matrix& b01,
                       const SimplexFitOptions& opts) {
    const std::size_t n = b11.cols();
    const std::size_t m = b11.rows();
    return fit_rows(n, m, opts,
                    [&](std::size_t i) { return shed_fit_problem(pool, b11, b01, static_cast<int>(i)); },
                    "fit_E", /*self_init=*/false);
}

std::vector<ThresholdEntry> build_threshold_pool_D(const SamplePool& pool,
                                                   const InfluenceModelD& model) {
    std::vector<ThresholdEntry> out;
    const int m = model.n_links();
    for (const CascadeSample* s : pool.training_samples()) {
        const int t_end = s->termination_time;
        // Model probabilities along the recorded states: probs[k] is the
        // prediction for step k+2, produced by the same incremental chain
        // the predictor uses so threshold comparisons stay bit-exact.
        std::vector<std::vector<double>> probs;
        StepChain chain = link_chain(model, s->states[0]);
        for (int t = 0; t + 1 < t_end; ++t) {
            if (t > 0) chain.advance(s->states[t]);
            probs.push_back(chain.probs());
        }
        auto prob_at = [&](int step, int link) {
            // step is 1-based; the initial state is observed, not predicted.
            return step <= 1 ? 1.0 : probs[step - 2][link];
        };
        ThresholdEntry entry;
        entry.loading_c = s->loading_c;
        entry.initial_failures = s->initial_failures;
        std::sort(entry.initial_failures.begin(), entry.initial_failures.end());
        entry.thresholds.resize(m);
        for (int i = 0; i < m; ++i) {
            if (!s->states[0][i]) {
                entry.thresholds[i] = 1.0;  // default failure
            } else if (const int fail = s->failure_step(i); fail > 0) {
                entry.thresholds[i] = 0.5 * (prob_at(fail - 1, i) + prob_at(fail, i));
            } else {
                entry.thresholds[i] = model.alpha * prob_at(t_end, i);
            }
        }
        out.push_back(std::move(entry));
    }
    return out;
}

std::vector<ThresholdEntry> build_threshold_pool_E(const SamplePool& pool,
                                                   const InfluenceModelE& model) {
    std::vector<ThresholdEntry> out;
    const int n = model.n_buses();
    for (const CascadeSample* s : pool.training_samples()) {
        const int t_end = s->termination_time;
        std::vector<std::vector<double>> lprobs;  // lprobs[t] pairs with l[t+1]
        const int steps = std::max(1, t_end - 1);
        StepChain chain = shed_chain(model, s->states[0]);
        for (int t = 0; t < steps; ++t) {
            if (t > 0) chain.advance(s->states[t]);
            lprobs.push_back(chain.probs());
        }

        ThresholdEntry entry;
        entry.loading_c = s->loading_c;
        entry.initial_failures = s->initial_failures;
        std::sort(entry.initial_failures.begin(), entry.initial_failures.end());
        entry.thresholds.resize(n);
        for (int i = 0; i < n; ++i) {
            if (t_end == 1) {
                // No service observations at all: the contingency held
                // without shedding, so treat it like a never-shedding bus
                // anchored at the single available prediction.
                entry.thresholds[i] = model.alpha * lprobs[0][i];
                continue;
            }
            bool ever_shed = false, ever_served = false;
            double min_prob = 1.0;     // over all steps
            double max_shed_prob = 0.0;    // P: max prob among shed steps
            double min_served_prob = 1.0;  // Q: min prob among served steps
            for (int t = 0; t + 1 < t_end; ++t) {
                const double p = lprobs[t][i];
                min_prob = std::min(min_prob, p);
                if (s->load_served[t][i]) {
                    ever_served = true;
                    min_served_prob = std::min(min_served_prob, p);
                } else {
                    ever_shed = true;
                    max_shed_prob = std::max(max_shed_prob, p);
                }
            }
            if (!ever_shed) {
                entry.thresholds[i] = model.alpha * min_prob;
            } else if (!ever_served) {
                // A single shed observation softens the all-shed threshold
                // to the midpoint between certainty and the prediction.
                entry.thresholds[i] = t_end == 2 ? 0.5 * (1.0 + lprobs[0][i]) : 1.0;
            } else {
                // Over-cautious split: when shed and served probabilities
                // separate cleanly this sits at the lowest served value and
                // classifies every recorded step correctly; when they
                // overlap it errs toward predicting shed.
                entry.thresholds[i] = std::max(max_shed_prob, min_served_prob);
            }
        }
        out.push_back(std::move(entry));
    }
    return out;
}

ThresholdSelection select_threshold(const std::vector<ThresholdEntry>& pool, double loading_c,
                                    const std::vector<uint8_t>& initial_state) {
    if (pool.empty()) throw std::invalid_argument("select_threshold: empty threshold pool");

    ThresholdSelection sel;
    sel.used_loading = loading_c;

    // L1 distance between initial states = size of the symmetric
    // difference of the failure sets; entries store failure sets over an
    // otherwise healthy network.
    int dead_in_query = 0;
    for (uint8_t alive : initial_state)
        if (!alive) ++dead_in_query;
    auto distance = [&](const ThresholdEntry& e) {
        int shared = 0, extra = 0;
        for (int b : e.initial_failures) {
            if (b < static_cast<int>(initial_state.size()) && !initial_state[b])
                ++shared;
            else
                ++extra;
        }
        return extra + dead_in_query - shared;
    };

    auto nearest_at = [&](double level) {
        int best = std::numeric_limits<int>::max();
        std::vector<const ThresholdEntry*> nearest;
        nearest.reserve(32);
        for (const auto& e : pool) {
            if (std::fabs(e.loading_c - level) >= 1e-9) continue;
            const int d = distance(e);
            if (d < best) {
                best = d;
                nearest.clear();
            }
            if (d == best) nearest.push_back(&e);
        }
        return nearest;
    };

    std::vector<const ThresholdEntry*> nearest = nearest_at(loading_c);
    if (nearest.empty()) {  // fall through to the level fallback below
        // No entry at the queried level: fall back to the nearest one.
        double best_level_gap = std::numeric_limits<double>::infinity();
        double best_level = loading_c;
        for (const auto& e : pool) {
            const double gap = std::fabs(e.loading_c - loading_c);
            if (gap < best_level_gap - 1e-12) {
                best_level_gap = gap;
                best_level = e.loading_c;
            }
        }
        sel.loading_fallback = true;
        sel.used_loading = best_level;
        log_warn("select_threshold: no entry at loading %.3f, using nearest level %.3f", loading_c,
                 sel.used_loading);
        nearest = nearest_at(best_level);
    }

    const std::size_t width = nearest.front()->thresholds.size();
    sel.thresholds.resize(width);
    if (nearest.size() == 1) {
        sel.thresholds = nearest.front()->thresholds;
    } else {
        // Lower median across tied entries, per entity.
        std::vector<double> vals(nearest.size());
        const std::size_t mid = (nearest.size() - 1) / 2;
        for (std::size_t i = 0; i < width; ++i) {
            for (std::size_t k = 0; k < nearest.size(); ++k) vals[k] = nearest[k]->thresholds[i];
            std::nth_element(vals.begin(), vals.begin() + mid, vals.end());
            sel.thresholds[i] = vals[mid];
        }
    }
    return sel;
}

namespace {

// Lower median (index (ka+kb-1)/2) of the merge of two ascending runs.
double merged_lower_median(const double* a, int ka, const double* b, int kb) {
    const int mid = (ka + kb - 1) / 2;
    int ia = 0, ib = 0;
    double current = 0.0;
    for (int consumed = 0; consumed <= mid; ++consumed) {
        if (ib >= kb || (ia < ka && a[ia] <= b[ib]))
            current = a[ia++];
        else
            current = b[ib++];
    }
    return current;
}

}  // namespace

ThresholdSelection select_threshold(const std::vector<ThresholdEntry>& pool,
                                    const ThresholdIndex& index, double loading_c,
                                    const std::vector<uint8_t>& initial_state) {
    if (index.empty()) return select_threshold(pool, loading_c, initial_state);
    if (index.loadings.size() != pool.size())
        throw std::invalid_argument("select_threshold: index does not match pool");

    ThresholdSelection sel;
    sel.used_loading = loading_c;

    std::vector<int> dead;
    for (std::size_t b = 0; b < initial_state.size(); ++b)
        if (!initial_state[b]) dead.push_back(static_cast<int>(b));
    const int dead_in_query = static_cast<int>(dead.size());
    const int n_state = static_cast<int>(initial_state.size());

    // Pair-query fast path over single-level pair pools.
    if (index.single_level && !index.sorted_vals.empty() && dead.size() == 2) {
        const double pool_level = index.loadings.front();
        if (std::fabs(pool_level - loading_c) >= 1e-9) {
            sel.loading_fallback = true;
            sel.used_loading = pool_level;
            log_warn("select_threshold: no entry at loading %.3f, using nearest level %.3f",
                     loading_c, sel.used_loading);
        }
        const int n_branches = static_cast<int>(index.posting_offsets.size()) - 1;
        const int a = dead[0], b = dead[1];
        if (a < n_branches && b < n_branches) {
            const int64_t key = static_cast<int64_t>(a) * n_branches + b;
            const auto lo = std::lower_bound(
                index.pair_entries.begin(), index.pair_entries.end(),
                std::make_pair(key, static_cast<int32_t>(0)));
            if (lo != index.pair_entries.end() && lo->first == key) {
                auto hi = lo;
                while (hi != index.pair_entries.end() && hi->first == key) ++hi;
                if (hi - lo == 1) {
                    sel.thresholds = pool[lo->second].thresholds;
                    return sel;
                }
                std::vector<double> vals;
                sel.thresholds.resize(index.width);
                for (std::size_t i = 0; i < index.width; ++i) {
                    vals.clear();
                    for (auto it = lo; it != hi; ++it)
                        vals.push_back(pool[it->second].thresholds[i]);
                    std::sort(vals.begin(), vals.end());
                    sel.thresholds[i] = vals[(vals.size() - 1) / 2];
                }
                return sel;
            }
            const int32_t a_lo = index.posting_offsets[a], a_hi = index.posting_offsets[a + 1];
            const int32_t b_lo = index.posting_offsets[b], b_hi = index.posting_offsets[b + 1];
            const int ka = a_hi - a_lo, kb = b_hi - b_lo;
            if (ka + kb > 0) {
                // No exact match, so the two posting lists are disjoint and
                // together form the full distance-2 tie set.
                if (ka + kb == 1) {
                    const int32_t only =
                        ka == 1 ? index.posting_entries[a_lo] : index.posting_entries[b_lo];
                    sel.thresholds = pool[only].thresholds;
                    return sel;
                }
                const double* base_a =
                    index.sorted_vals.data() + static_cast<std::size_t>(a_lo) * index.width;
                const double* base_b =
                    index.sorted_vals.data() + static_cast<std::size_t>(b_lo) * index.width;
                sel.thresholds.resize(index.width);
                for (std::size_t i = 0; i < index.width; ++i)
                    sel.thresholds[i] =
                        merged_lower_median(base_a + i * ka, ka, base_b + i * kb, kb);
                return sel;
            }
            // Every entry is unshared (distance 4): fall through to the
            // generic scan, which collects them all.
        }
    }

    auto entry_distance = [&](std::size_t k) {
        int shared = 0, extra = 0;
        for (int32_t f = index.fail_offsets[k]; f < index.fail_offsets[k + 1]; ++f) {
            const int b = index.fail_ids[f];
            if (b < n_state && !initial_state[b])
                ++shared;
            else
                ++extra;
        }
        return extra + dead_in_query - shared;
    };

    std::vector<std::size_t> nearest;
    nearest.reserve(32);
    auto scan_all_at = [&](double level) {
        int best = std::numeric_limits<int>::max();
        nearest.clear();
        for (std::size_t k = 0; k < index.loadings.size(); ++k) {
            if (std::fabs(index.loadings[k] - level) >= 1e-9) continue;
            const int d = entry_distance(k);
            if (d < best) {
                best = d;
                nearest.clear();
            }
            if (d == best) nearest.push_back(k);
        }
        return best;
    };

    auto nearest_at = [&](double level) {
        // Entries sharing no branch with the query all sit at distance
        // |entry| + |query|; when the posting lists surface a strictly
        // closer candidate the scan can stop there.
        if (!index.posting_entries.empty()) {
            std::vector<std::size_t> candidates;
            candidates.reserve(64);
            for (int b : dead) {
                if (b + 1 >= static_cast<int>(index.posting_offsets.size())) continue;
                for (int32_t f = index.posting_offsets[b]; f < index.posting_offsets[b + 1]; ++f)
                    candidates.push_back(static_cast<std::size_t>(index.posting_entries[f]));
            }
            std::sort(candidates.begin(), candidates.end());
            candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
            int best = std::numeric_limits<int>::max();
            nearest.clear();
            for (std::size_t k : candidates) {
                if (std::fabs(index.loadings[k] - level) >= 1e-9) continue;
                const int d = entry_distance(k);
                if (d < best) {
                    best = d;
                    nearest.clear();
                }
                if (d == best) nearest.push_back(k);
            }
            if (!nearest.empty() && best < dead_in_query + 2) return;
        }
        scan_all_at(level);
    };

    nearest_at(loading_c);
    if (nearest.empty()) {
        double best_level_gap = std::numeric_limits<double>::infinity();
        double best_level = loading_c;
        for (double level : index.loadings) {
            const double gap = std::fabs(level - loading_c);
            if (gap < best_level_gap - 1e-12) {
                best_level_gap = gap;
                best_level = level;
            }
        }
        sel.loading_fallback = true;
        sel.used_loading = best_level;
        log_warn("select_threshold: no entry at loading %.3f, using nearest level %.3f", loading_c,
                 sel.used_loading);
        nearest_at(best_level);
    }

    const std::size_t width = pool[nearest.front()].thresholds.size();
    sel.thresholds.resize(width);
    if (nearest.size() == 1) {
        sel.thresholds = pool[nearest.front()].thresholds;
    } else {
        // Transposed gather keeps the per-entity median selection inside a
        // compact scratch block.
        const std::size_t k_count = nearest.size();
        const std::size_t mid = (k_count - 1) / 2;
        std::vector<double> scratch(k_count * width);
        for (std::size_t k = 0; k < k_count; ++k) {
            const auto& src = pool[nearest[k]].thresholds;
            for (std::size_t i = 0; i < width; ++i) scratch[i * k_count + k] = src[i];
        }
        for (std::size_t i = 0; i < width; ++i) {
            double* col = scratch.data() + i * k_count;
            std::nth_element(col, col + mid, col + k_count);
            sel.thresholds[i] = col[mid];
        }
    }
    return sel;
}

InfluenceModel train_model(const SamplePool& pool, const TrainOptions& opts) {
    InfluenceModel model;
    auto [a11, a01] = estimate_A(pool);
    SimplexFitResult d = fit_rows(
        a11.rows(), a11.rows(), opts.fit,
        [&, &a11 = a11, &a01 = a01](std::size_t i) {
            return link_fit_problem(pool, a11, a01, static_cast<int>(i));
        },
        "fit_D", /*self_init=*/true, opts.threads);
    model.link_model.a11 = std::move(a11);
    model.link_model.a01 = std::move(a01);
    model.link_model.d = std::move(d.weights);
    model.link_model.alpha = opts.alpha_d;
    model.link_model.fit_converged = d.converged;
    model.link_model.rebuild_cache();
    model.link_model.threshold_pool = build_threshold_pool_D(pool, model.link_model);
    model.link_model.threshold_index = build_threshold_index(model.link_model.threshold_pool);

    auto [b11, b01] = estimate_B(pool);
    SimplexFitResult e = fit_rows(
        b11.cols(), b11.rows(), opts.fit,
        [&, &b11 = b11, &b01 = b01](std::size_t i) {
            return shed_fit_problem(pool, b11, b01, static_cast<int>(i));
        },
        "fit_E", /*self_init=*/false, opts.threads);
    model.shed_model.b11 = std::move(b11);
    model.shed_model.b01 = std::move(b01);
    model.shed_model.e = std::move(e.weights);
    model.shed_model.alpha = opts.alpha_e;
    model.shed_model.fit_converged = e.converged;
    model.shed_model.rebuild_cache();
    model.shed_model.threshold_pool = build_threshold_pool_E(pool, model.shed_model);
    model.shed_model.threshold_index = build_threshold_index(model.shed_model.threshold_pool);

    if (!pool.samples.empty()) model.loading_c = pool.samples[0].loading_c;
    if (!pool.samples.empty()) model.policy = pool.samples[0].policy;
    return model;
}

}  // namespace gridcast
