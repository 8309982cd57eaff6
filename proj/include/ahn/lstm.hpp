#pragma once

#include "ahn/tape.hpp"

namespace ahn {

/// Weights of one LSTM direction. Gate rows are laid out as
/// [input; forget; candidate; output], each `hidden` rows tall.
template <typename Real> struct LstmVars {
  Var input_weights;     // 4h x in
  Var recurrent_weights; // 4h x h
  Var bias;              // 1 x 4h
};

/// Runs an LSTM over `lengths.size()` sequences packed as consecutive blocks
/// of `block` rows of x. Sequence b reads rows [0, lengths[b]) of its block,
/// starting from a zero state; with `reverse` it reads them last to first.
/// Rows at or beyond the sequence length produce zero outputs and never
/// influence any other row.
template <typename Real>
Var lstm(Tape<Real> &t, Var x, std::size_t block,
         const std::vector<std::size_t> &lengths, const LstmVars<Real> &w,
         bool reverse) {
  const auto &X = t.value(x);
  const auto &Wx = t.value(w.input_weights);
  const auto &Wh = t.value(w.recurrent_weights);
  const auto &B = t.value(w.bias);
  const std::size_t in = X.cols();
  const std::size_t h = Wh.cols();
  const std::size_t nseq = lengths.size();
  if (X.rank() != 2 || X.rows() != nseq * block)
    throw DimensionError("lstm: input " + shape_str(X.shape()) + " is not " +
                         std::to_string(nseq) + " blocks of " +
                         std::to_string(block));
  if (Wx.rows() != 4 * h || Wx.cols() != in || Wh.rows() != 4 * h ||
      B.size() != 4 * h)
    throw DimensionError("lstm: weight shapes " + shape_str(Wx.shape()) + ", " +
                         shape_str(Wh.shape()) + ", " + shape_str(B.shape()) +
                         " inconsistent with input width " + std::to_string(in));

  // Per-row cache of activated gates (i, f, g, o), cell state and tanh(cell).
  const std::size_t rows = X.rows();
  std::vector<Real> gates(rows * 4 * h, Real(0));
  std::vector<Real> cell(rows * h, Real(0));
  std::vector<Real> tcell(rows * h, Real(0));
  Tensor<Real> H = Tensor<Real>::matrix(rows, h);

  std::vector<Real> z(4 * h);
  for (std::size_t s = 0; s < nseq; ++s) {
    const std::size_t len = lengths[s];
    if (len > block) throw DimensionError("lstm: sequence length exceeds block");
    const Real *hprev = nullptr;
    const Real *cprev = nullptr;
    for (std::size_t step = 0; step < len; ++step) {
      const std::size_t pos = reverse ? len - 1 - step : step;
      const std::size_t row = s * block + pos;
      const Real *xr = X.data() + row * in;
      for (std::size_t j = 0; j < 4 * h; ++j) {
        Real acc = B[j];
        const Real *wxr = Wx.data() + j * in;
        for (std::size_t k = 0; k < in; ++k) acc += wxr[k] * xr[k];
        if (hprev) {
          const Real *whr = Wh.data() + j * h;
          for (std::size_t k = 0; k < h; ++k) acc += whr[k] * hprev[k];
        }
        z[j] = acc;
      }
      Real *gr = gates.data() + row * 4 * h;
      Real *cr = cell.data() + row * h;
      Real *tr = tcell.data() + row * h;
      Real *hr = H.data() + row * h;
      for (std::size_t j = 0; j < h; ++j) {
        const Real ig = detail::sigmoid(z[j]);
        const Real fg = detail::sigmoid(z[h + j]);
        const Real cg = std::tanh(z[2 * h + j]);
        const Real og = detail::sigmoid(z[3 * h + j]);
        gr[j] = ig;
        gr[h + j] = fg;
        gr[2 * h + j] = cg;
        gr[3 * h + j] = og;
        cr[j] = ig * cg + (cprev ? fg * cprev[j] : Real(0));
        tr[j] = std::tanh(cr[j]);
        hr[j] = og * tr[j];
      }
      hprev = hr;
      cprev = cr;
    }
  }

  const bool rg = t.requires_grad(x) || t.requires_grad(w.input_weights) ||
                  t.requires_grad(w.recurrent_weights) || t.requires_grad(w.bias);
  Tensor<Real> Hsaved = H;
  return t.record(
      std::move(H), rg,
      [x, w, block, lengths, reverse, h, in, gates = std::move(gates),
       cell = std::move(cell), tcell = std::move(tcell),
       Hs = std::move(Hsaved)](Tape<Real> &tp, const Tensor<Real> &g) {
        const Real fault = debug::fault_scale<Real>("lstm");
        const auto &X = tp.value(x);
        const auto &Wx = tp.value(w.input_weights);
        const auto &Wh = tp.value(w.recurrent_weights);
        Tensor<Real> dX(X.shape());
        Tensor<Real> dWx(Wx.shape());
        Tensor<Real> dWh(Wh.shape());
        Tensor<Real> dB(tp.value(w.bias).shape());
        std::vector<Real> dh(h), dc(h), dz(4 * h), dh_prev(h), dc_prev(h);
        for (std::size_t s = 0; s < lengths.size(); ++s) {
          const std::size_t len = lengths[s];
          std::fill(dh_prev.begin(), dh_prev.end(), Real(0));
          std::fill(dc_prev.begin(), dc_prev.end(), Real(0));
          for (std::size_t step = len; step-- > 0;) {
            const std::size_t pos = reverse ? len - 1 - step : step;
            const std::size_t row = s * block + pos;
            const bool first = step == 0;
            const std::size_t prev_row =
                first ? row : s * block + (reverse ? pos + 1 : pos - 1);
            const Real *gr = gates.data() + row * 4 * h;
            const Real *tr = tcell.data() + row * h;
            const Real *cp = first ? nullptr : cell.data() + prev_row * h;
            const Real *hp = first ? nullptr : Hs.data() + prev_row * h;
            for (std::size_t j = 0; j < h; ++j) {
              dh[j] = g(row, j) + dh_prev[j];
              const Real ig = gr[j], fg = gr[h + j], cg = gr[2 * h + j],
                         og = gr[3 * h + j];
              dc[j] = dc_prev[j] + dh[j] * og * (Real(1) - tr[j] * tr[j]);
              const Real d_o = dh[j] * tr[j];
              const Real d_i = dc[j] * cg;
              const Real d_g = dc[j] * ig;
              const Real d_f = cp ? dc[j] * cp[j] : Real(0);
              dz[j] = fault * d_i * ig * (Real(1) - ig);
              dz[h + j] = d_f * fg * (Real(1) - fg);
              dz[2 * h + j] = d_g * (Real(1) - cg * cg);
              dz[3 * h + j] = d_o * og * (Real(1) - og);
              dc_prev[j] = dc[j] * fg;
            }
            const Real *xr = X.data() + row * X.cols();
            Real *dxr = dX.data() + row * X.cols();
            std::fill(dh_prev.begin(), dh_prev.end(), Real(0));
            for (std::size_t j = 0; j < 4 * h; ++j) {
              const Real dzj = dz[j];
              dB[j] += dzj;
              if (dzj == Real(0)) continue;
              Real *dwx = dWx.data() + j * in;
              const Real *wx = Wx.data() + j * in;
              for (std::size_t k = 0; k < in; ++k) {
                dwx[k] += dzj * xr[k];
                dxr[k] += dzj * wx[k];
              }
              if (hp) {
                Real *dwh = dWh.data() + j * h;
                const Real *wh = Wh.data() + j * h;
                for (std::size_t k = 0; k < h; ++k) {
                  dwh[k] += dzj * hp[k];
                  dh_prev[k] += dzj * wh[k];
                }
              }
            }
          }
        }
        tp.accumulate(x, dX);
        tp.accumulate(w.input_weights, dWx);
        tp.accumulate(w.recurrent_weights, dWh);
        tp.accumulate(w.bias, dB);
      });
}

/// Forward and backward LSTMs over the same packed sequences with their
/// hidden states concatenated per step: output rows are [h_fwd, h_bwd].
template <typename Real>
Var bilstm(Tape<Real> &t, Var x, std::size_t block,
           const std::vector<std::size_t> &lengths, const LstmVars<Real> &fwd,
           const LstmVars<Real> &bwd) {
  Var f = lstm(t, x, block, lengths, fwd, false);
  Var b = lstm(t, x, block, lengths, bwd, true);
  return concat_cols(t, {f, b});
}

} // namespace ahn
