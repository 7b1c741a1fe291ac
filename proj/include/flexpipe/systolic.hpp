#pragma once

// Cycle-accurate, bit-exact model of a weight-stationary systolic array with
// configurable transparent pipelining.
//
// Each cycle has two phases. During settle, values propagate combinationally
// through bypassed registers: an activation crosses a whole k-column group,
// and the k products of a k-row group are chained through 3:2 carry-save
// stages, resolved by the carry-propagate adder of the group's last row.
// During latch, every opaque register captures its input. Every datum carries
// the index of the A row it belongs to, so the output collector needs no
// knowledge of the schedule and misaligned dataflow is detected.

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "flexpipe/activity.hpp"
#include "flexpipe/analytic.hpp"
#include "flexpipe/csa.hpp"
#include "flexpipe/matrix.hpp"
#include "flexpipe/pe_grid.hpp"

namespace flexpipe {

/// Cycle (counted from the end of the weight preload) at which A row `t`
/// enters array row `r` at the west edge: rows of a k-group arrive together.
constexpr std::uint64_t input_skew(int k, std::uint64_t r, std::uint64_t t) noexcept {
    return t + r / static_cast<std::uint64_t>(k);
}

struct PeState {
    std::int64_t weight = 0;
    std::int64_t h_reg = 0;
    std::uint64_t v_sum_reg = 0;
    std::uint64_t v_carry_reg = 0;
    PeConfig config;
    std::uint64_t h_writes = 0;
    std::uint64_t v_writes = 0;
};

struct SimOptions {
    /// Per-cycle trace sink; null disables tracing.
    std::ostream* trace = nullptr;
    /// PEs to trace as (row, col); empty means all of them.
    std::vector<std::pair<std::uint64_t, std::uint64_t>> probes;
    char delimiter = ',';
    /// Check every carry-propagate result against a plain running sum.
    bool check_carry_save = true;
};

struct TileSimResult {
    Matrix<std::int64_t> output;  ///< T x C, sign-extended from the accumulator width
    Cycles cycles = 0;
    ActivityCounters counters;
};

inline ActivityCounters activity_counters(const TileSimResult& r) noexcept { return r.counters; }

class SystolicArray {
public:
    explicit SystolicArray(ArrayConfig cfg)
        : cfg_(std::move(cfg)), acc_(cfg_.accum_bits), pes_(cfg_.rows * cfg_.cols) {
        cfg_.validate();
        configure(1);
    }

    const ArrayConfig& config() const noexcept { return cfg_; }
    int depth() const noexcept { return k_; }
    const PeState& pe(std::uint64_t r, std::uint64_t c) const { return pes_.at(r * cfg_.cols + c); }

    /// Selects the pipeline depth; the configuration bits are latched with the next weight preload.
    void configure(int k) {
        require_supported(k, cfg_);
        k_ = k;
        grid_ = build_pe_grid(k, cfg_);
    }

    /// Preload: row i of the weight tile and its configuration bits are latched in cycle i.
    Cycles load_weights(const Matrix<std::int64_t>& b_tile) {
        if (b_tile.rows() != cfg_.rows || b_tile.cols() != cfg_.cols)
            throw ShapeError("weight tile is " + dims(b_tile) + ", array is " + std::to_string(cfg_.rows) + "x" +
                             std::to_string(cfg_.cols));
        for (auto v : b_tile.data()) require_fits(v, cfg_.input_bits);
        for (std::uint64_t r = 0; r < cfg_.rows; ++r) {
            for (std::uint64_t c = 0; c < cfg_.cols; ++c) {
                auto& pe = pes_[r * cfg_.cols + c];
                pe = PeState{};
                pe.weight = b_tile(r, c);
                pe.config = grid_(r, c);
            }
        }
        return cfg_.rows;
    }

    /// Streams the T x R activation tile through the loaded weights.
    TileSimResult stream(const Matrix<std::int64_t>& a_tile, const SimOptions& opts = {}) {
        const std::uint64_t R = cfg_.rows, C = cfg_.cols, T = a_tile.rows();
        if (T == 0 || a_tile.cols() != R)
            throw ShapeError("activation tile is " + dims(a_tile) + ", expected Tx" + std::to_string(R));
        for (auto v : a_tile.data()) require_fits(v, cfg_.input_bits);

        const auto K = static_cast<std::uint64_t>(k_);
        const std::size_t n = R * C;
        std::vector<std::int64_t> act(n);
        std::vector<std::int64_t> act_tag(n);
        std::vector<CarrySave> vout(n);
        std::vector<std::int64_t> vtag(n);
        std::vector<std::int64_t> h_tag(n, -1), v_tag(n, -1);
        std::vector<std::uint64_t> plain(C);  // carry-save soundness reference
        std::vector<char> done(T * C, 0);

        std::uint64_t opaque = 0;
        for (const auto& pe : pes_) opaque += !pe.config.h_transparent + !pe.config.v_transparent;
        const std::uint64_t bypassed = 2 * n - opaque;

        TileSimResult res;
        res.output = Matrix<std::int64_t>(T, C);
        auto& cnt = res.counters;

        const std::uint64_t guard = 2 * (R + C + T) + 4;
        std::uint64_t captured = 0;
        std::uint64_t s = 0;
        if (opts.trace) *opts.trace << trace_header(opts.delimiter);
        for (; captured < T * C; ++s) {
            if (s > guard) throw std::logic_error("systolic pipeline failed to drain");
            // settle
            for (std::uint64_t r = 0; r < R; ++r) {
                for (std::uint64_t c = 0; c < C; ++c) {
                    const std::size_t i = r * C + c;
                    auto& pe = pes_[i];
                    std::int64_t a = 0, tag = -1;
                    if (c == 0) {
                        const std::uint64_t offset = r / K;
                        if (s >= offset && s - offset < T) {
                            tag = static_cast<std::int64_t>(s - offset);
                            a = a_tile(s - offset, r);
                        }
                    } else if (pes_[i - 1].config.h_transparent) {
                        a = act[i - 1];
                        tag = act_tag[i - 1];
                    } else {
                        a = pes_[i - 1].h_reg;
                        tag = h_tag[i - 1];
                    }
                    act[i] = a;
                    act_tag[i] = tag;

                    CarrySave in{};
                    std::int64_t in_tag = tag;
                    if (r > 0) {
                        const auto& up = pes_[i - C];
                        if (up.config.v_transparent) {
                            in = vout[i - C];
                            in_tag = vtag[i - C];
                        } else {
                            in = {up.v_sum_reg, up.v_carry_reg};
                            in_tag = v_tag[i - C];
                        }
                    }
                    if (in_tag != tag)
                        throw std::logic_error("partial sum of A row " + std::to_string(in_tag) +
                                               " met activation of A row " + std::to_string(tag) + " at PE(" +
                                               std::to_string(r) + "," + std::to_string(c) + ")");

                    const std::uint64_t product = acc_.mul_signed(pe.weight, a);
                    const CarrySave cs = csa_3to2(product, in.sum, in.carry, acc_);
                    if (opts.check_carry_save) {
                        if (r % K == 0) plain[c] = resolve(in, acc_);
                        plain[c] = acc_.add(plain[c], product);
                    }
                    if (pe.config.v_transparent) {
                        vout[i] = cs;
                    } else {
                        vout[i] = {resolve(cs, acc_), 0};
                        if (opts.check_carry_save && vout[i].sum != plain[c])
                            throw std::logic_error("carry-save chain disagrees with the plain sum");
                    }
                    vtag[i] = tag;
                    if (tag >= 0) ++cnt.mac_ops;
                }
            }
            if (opts.trace) write_trace(*opts.trace, opts, R + s, act, vout);
            // latch
            for (std::size_t i = 0; i < n; ++i) {
                auto& pe = pes_[i];
                if (!pe.config.h_transparent) {
                    pe.h_reg = act[i];
                    h_tag[i] = act_tag[i];
                    if (act_tag[i] >= 0) ++pe.h_writes, ++cnt.reg_writes;
                }
                if (!pe.config.v_transparent) {
                    pe.v_sum_reg = vout[i].sum;
                    pe.v_carry_reg = vout[i].carry;
                    v_tag[i] = vtag[i];
                    if (vtag[i] >= 0) ++pe.v_writes, ++cnt.reg_writes;
                }
            }
            // the output accumulator samples the bottom row's registers
            for (std::uint64_t c = 0; c < C; ++c) {
                const std::size_t i = (R - 1) * C + c;
                if (v_tag[i] < 0) continue;
                const auto t = static_cast<std::uint64_t>(v_tag[i]);
                if (done[t * C + c]) continue;  // stale value held in the register
                done[t * C + c] = 1;
                res.output(t, c) = acc_.to_signed(pes_[i].v_sum_reg);
                ++captured;
            }
            cnt.active_reg_cycles += opaque;
            cnt.gated_reg_cycles += bypassed;
        }
        cnt.streaming_cycles = s;
        cnt.cycles = cfg_.rows + s;
        res.cycles = cnt.cycles;
        return res;
    }

    /// Preload plus streaming of one tile at depth k.
    TileSimResult run_tile(const Matrix<std::int64_t>& a_tile, const Matrix<std::int64_t>& b_tile, int k,
                           const SimOptions& opts = {}) {
        configure(k);
        load_weights(b_tile);
        return stream(a_tile, opts);
    }

private:
    static std::string dims(const Matrix<std::int64_t>& m) {
        return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
    }

    static std::string trace_header(char d) {
        std::string h = "cycle";
        for (const char* f : {"row", "col", "weight", "activation", "sum", "carry"}) (h += d) += f;
        return h + "\n";
    }

    void write_trace(std::ostream& os, const SimOptions& opts, Cycles cycle, const std::vector<std::int64_t>& act,
                     const std::vector<CarrySave>& vout) const {
        const char d = opts.delimiter;
        auto emit = [&](std::uint64_t r, std::uint64_t c) {
            if (r >= cfg_.rows || c >= cfg_.cols) return;
            const std::size_t i = r * cfg_.cols + c;
            os << cycle << d << r << d << c << d << pes_[i].weight << d << act[i] << d << acc_.to_signed(vout[i].sum)
               << d << acc_.to_signed(vout[i].carry) << '\n';
        };
        if (opts.probes.empty()) {
            for (std::uint64_t r = 0; r < cfg_.rows; ++r)
                for (std::uint64_t c = 0; c < cfg_.cols; ++c) emit(r, c);
        } else {
            for (const auto& [r, c] : opts.probes) emit(r, c);
        }
    }

    ArrayConfig cfg_;
    WordArith acc_;
    int k_ = 1;
    Matrix<PeConfig> grid_;
    std::vector<PeState> pes_;
};

inline TileSimResult simulate_tile(const Matrix<std::int64_t>& a_tile, const Matrix<std::int64_t>& b_tile, int k,
                                   const ArrayConfig& cfg, const SimOptions& opts = {}) {
    SystolicArray array(cfg);
    return array.run_tile(a_tile, b_tile, k, opts);
}

/// Output accumulator below the array: sums tile partials modulo 2^accum_bits.
class Accumulator {
public:
    Accumulator(std::uint64_t rows, std::uint64_t cols, int accum_bits) : acc_(accum_bits), partial_(rows, cols) {}

    void add(const Matrix<std::int64_t>& tile_output) {
        if (tile_output.rows() != partial_.rows() || tile_output.cols() != partial_.cols())
            throw ShapeError("accumulator shape mismatch");
        auto dst = partial_.data();
        auto src = tile_output.data();
        for (std::size_t i = 0; i < dst.size(); ++i)
            dst[i] = acc_.to_signed(acc_.add(acc_.from_signed(dst[i]), acc_.from_signed(src[i])));
    }

    const Matrix<std::int64_t>& partial() const noexcept { return partial_; }

private:
    WordArith acc_;
    Matrix<std::int64_t> partial_;
};

struct GemmSimResult {
    Matrix<std::int64_t> output;  ///< T x M
    ActivityCounters totals;
    std::uint64_t tiles = 0;
};

/// Tiled GEMM: column blocks of B outermost, reduction tiles innermost, ragged
/// edges zero-padded to the array size.
inline GemmSimResult simulate_gemm(const Matrix<std::int64_t>& a, const Matrix<std::int64_t>& b, int k,
                                   const ArrayConfig& cfg, const SimOptions& opts = {}) {
    if (a.cols() != b.rows() || a.rows() == 0 || a.cols() == 0 || b.cols() == 0)
        throw ShapeError("cannot multiply " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " by " +
                         std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    const std::uint64_t T = a.rows(), N = a.cols(), M = b.cols();
    const std::uint64_t R = cfg.rows, C = cfg.cols;

    SystolicArray array(cfg);
    GemmSimResult out;
    out.output = Matrix<std::int64_t>(T, M);
    for (std::uint64_t m0 = 0; m0 < M; m0 += C) {
        Accumulator accum(T, C, cfg.accum_bits);
        for (std::uint64_t n0 = 0; n0 < N; n0 += R) {
            auto tile = array.run_tile(a.block(0, n0, T, R), b.block(n0, m0, R, C), k, opts);
            accum.add(tile.output);
            out.totals += tile.counters;
            ++out.tiles;
        }
        for (std::uint64_t t = 0; t < T; ++t)
            for (std::uint64_t c = 0; c < C && m0 + c < M; ++c) out.output(t, m0 + c) = accum.partial()(t, c);
    }
    return out;
}

/// Plain triple-loop product modulo 2^accum_bits.
inline Matrix<std::int64_t> reference_matmul(const Matrix<std::int64_t>& a, const Matrix<std::int64_t>& b,
                                             int accum_bits) {
    if (a.cols() != b.rows()) throw ShapeError("inner dimensions differ");
    const WordArith w(accum_bits);
    Matrix<std::int64_t> x(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            std::uint64_t s = 0;
            for (std::size_t p = 0; p < a.cols(); ++p) s = w.add(s, w.mul_signed(a(i, p), b(p, j)));
            x(i, j) = w.to_signed(s);
        }
    return x;
}

}  // namespace flexpipe
