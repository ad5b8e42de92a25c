#include "triplane/nn/ops.hpp"

#include <algorithm>
#include <stdexcept>

namespace triplane::nn {

namespace {

// The hot loops below fuse all in-bounds kernel taps of one input plane into a
// single pass per output row, so each element is loaded once and accumulated in
// registers instead of being re-streamed nine times.  Columns where a shifted
// index would leave the plane (only possible with pad=1, or near the valid-mode
// edges in the gradient kernels) are finished by a scalar fix-up over the
// column ranges [0, left_end) and [right_beg, n).
struct ColSplit {
  int lo, hi;        // columns where every kx tap is in bounds
  int left_end;      // border columns on the left: [0, left_end)
  int right_beg, n;  // border columns on the right: [right_beg, n)
};

inline ColSplit col_split(int lo, int hi, int n) {
  const int left_end = std::min(std::max(lo, 0), n);
  return {lo, std::min(hi, n), left_end, std::max(hi, left_end), n};
}

// Same-padding fast paths.  Away from the first/last row and column every tap
// is in bounds, so that whole region runs as one flat loop per channel pair
// (the per-row form spends most of its time in vector prologues and epilogues
// on rows this short).  The flat loop reads wrapped neighbours in the border
// columns; those cells are redone from scratch once all channels are summed.
template <typename T>
void conv3x3_forward_same(const Tensor<T>& in, const T* w, const T* b, uint32_t out_ch,
                          Tensor<T>& out) {
  const int H = static_cast<int>(in.h), W = static_cast<int>(in.w);
  out.resize_dirty(out_ch, in.h, in.w);
  const ptrdiff_t n0 = W + 1, n1 = static_cast<ptrdiff_t>(H - 1) * W - 1;
  const int ye[2] = {0, H - 1}, nye = H >= 2 ? 2 : 1;
  const int xe[2] = {0, W - 1}, nxe = W >= 2 ? 2 : 1;

  for (uint32_t co = 0; co < out_ch; ++co) {
    T* op = out.plane(co);
    std::fill(op, op + out.plane_size(), b[co]);
    for (uint32_t ci = 0; ci < in.c; ++ci) {
      const T* ip = in.plane(ci);
      const T* wk = w + (static_cast<size_t>(co) * in.c + ci) * 9;
      const T w00 = wk[0], w01 = wk[1], w02 = wk[2];
      const T w10 = wk[3], w11 = wk[4], w12 = wk[5];
      const T w20 = wk[6], w21 = wk[7], w22 = wk[8];
#pragma omp simd
      for (ptrdiff_t n = n0; n < n1; ++n)
        op[n] += w00 * ip[n - W - 1] + w01 * ip[n - W] + w02 * ip[n - W + 1] +
                 w10 * ip[n - 1] + w11 * ip[n] + w12 * ip[n + 1] +
                 w20 * ip[n + W - 1] + w21 * ip[n + W] + w22 * ip[n + W + 1];

      for (int t = 0; t < nye; ++t) {
        const int y = ye[t];
        T* orow = op + static_cast<size_t>(y) * W;
        const int ky0 = std::max(0, 1 - y), ky1 = std::min(3, H + 1 - y);
        for (int ky = ky0; ky < ky1; ++ky) {
          const T* r = ip + static_cast<size_t>(y + ky - 1) * W;
          const T wa = wk[ky * 3], wm = wk[ky * 3 + 1], wc = wk[ky * 3 + 2];
#pragma omp simd
          for (int x = 1; x < W - 1; ++x) orow[x] += wa * r[x - 1] + wm * r[x] + wc * r[x + 1];
        }
        for (int u = 0; u < nxe; ++u) {
          const int x = xe[u];
          T acc = T(0);
          for (int ky = ky0; ky < ky1; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = x + kx - 1;
              if (ix >= 0 && ix < W)
                acc += wk[ky * 3 + kx] * ip[static_cast<size_t>(y + ky - 1) * W + ix];
            }
          orow[x] += acc;
        }
      }
    }
    for (int y = 1; y < H - 1; ++y)
      for (int u = 0; u < nxe; ++u) {
        const int x = xe[u];
        T acc = b[co];
        for (uint32_t ci = 0; ci < in.c; ++ci) {
          const T* ip = in.plane(ci);
          const T* wk = w + (static_cast<size_t>(co) * in.c + ci) * 9;
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = x + kx - 1;
              if (ix >= 0 && ix < W)
                acc += wk[ky * 3 + kx] * ip[static_cast<size_t>(y + ky - 1) * W + ix];
            }
        }
        op[static_cast<size_t>(y) * W + x] = acc;
      }
  }
}

template <typename T>
void conv3x3_dgrad_same(const Tensor<T>& dout, const T* w, uint32_t in_ch, Tensor<T>& din) {
  const int H = static_cast<int>(dout.h), W = static_cast<int>(dout.w);
  din.resize(in_ch, dout.h, dout.w);
  const ptrdiff_t n0 = W + 1, n1 = static_cast<ptrdiff_t>(H - 1) * W - 1;
  const int ye[2] = {0, H - 1}, nye = H >= 2 ? 2 : 1;
  const int xe[2] = {0, W - 1}, nxe = W >= 2 ? 2 : 1;

  for (uint32_t ci = 0; ci < in_ch; ++ci) {
    T* dp = din.plane(ci);
    for (uint32_t co = 0; co < dout.c; ++co) {
      const T* q = dout.plane(co);
      const T* wk = w + (static_cast<size_t>(co) * in_ch + ci) * 9;
      const T w00 = wk[0], w01 = wk[1], w02 = wk[2];
      const T w10 = wk[3], w11 = wk[4], w12 = wk[5];
      const T w20 = wk[6], w21 = wk[7], w22 = wk[8];
#pragma omp simd
      for (ptrdiff_t n = n0; n < n1; ++n)
        dp[n] += w00 * q[n + W + 1] + w01 * q[n + W] + w02 * q[n + W - 1] +
                 w10 * q[n + 1] + w11 * q[n] + w12 * q[n - 1] +
                 w20 * q[n - W + 1] + w21 * q[n - W] + w22 * q[n - W - 1];

      for (int t = 0; t < nye; ++t) {
        const int iy = ye[t];
        T* drow = dp + static_cast<size_t>(iy) * W;
        const int ky0 = std::max(0, iy + 2 - H), ky1 = std::min(3, iy + 2);
        for (int ky = ky0; ky < ky1; ++ky) {
          const T* qr = q + static_cast<size_t>(iy - ky + 1) * W;
          const T wa = wk[ky * 3], wm = wk[ky * 3 + 1], wc = wk[ky * 3 + 2];
#pragma omp simd
          for (int ix = 1; ix < W - 1; ++ix)
            drow[ix] += wa * qr[ix + 1] + wm * qr[ix] + wc * qr[ix - 1];
        }
        for (int u = 0; u < nxe; ++u) {
          const int ix = xe[u];
          T acc = T(0);
          for (int ky = ky0; ky < ky1; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int ox = ix - kx + 1;
              if (ox >= 0 && ox < W)
                acc += wk[ky * 3 + kx] * q[static_cast<size_t>(iy - ky + 1) * W + ox];
            }
          drow[ix] += acc;
        }
      }
    }
    for (int iy = 1; iy < H - 1; ++iy)
      for (int u = 0; u < nxe; ++u) {
        const int ix = xe[u];
        T acc = T(0);
        for (uint32_t co = 0; co < dout.c; ++co) {
          const T* q = dout.plane(co);
          const T* wk = w + (static_cast<size_t>(co) * in_ch + ci) * 9;
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int ox = ix - kx + 1;
              if (ox >= 0 && ox < W)
                acc += wk[ky * 3 + kx] * q[static_cast<size_t>(iy - ky + 1) * W + ox];
            }
        }
        dp[static_cast<size_t>(iy) * W + ix] = acc;
      }
  }
}

// Weight gradients run the same flat interior loop, accumulating each tap into
// a lane array that lives across the whole plane so the horizontal reduction
// happens once per channel pair.  The flat range includes the border columns,
// whose out-of-range taps read a wrapped neighbour; the border pass below
// subtracts exactly those products again (same index arithmetic, unclamped).
template <typename T>
void conv3x3_wgrad_same(const Tensor<T>& in, const Tensor<T>& dout, T* dw, T* db) {
  const int H = static_cast<int>(in.h), W = static_cast<int>(in.w);
  constexpr int VL = 16;
  const ptrdiff_t n0 = W + 1, n1 = static_cast<ptrdiff_t>(H - 1) * W - 1;
  const int ye[2] = {0, H - 1}, nye = H >= 2 ? 2 : 1;
  const int xe[2] = {0, W - 1}, nxe = W >= 2 ? 2 : 1;

  for (uint32_t co = 0; co < dout.c; ++co) {
    const T* qp = dout.plane(co);
    T bacc = T(0);
    for (size_t i = 0; i < dout.plane_size(); ++i) bacc += qp[i];
    db[co] += bacc;

    for (uint32_t ci = 0; ci < in.c; ++ci) {
      const T* ip = in.plane(ci);
      T acc[9][VL] = {};
      T ab[9] = {};  // edge-row and border-column corrections, by tap
      const auto block = [&acc, qp, ip, W](ptrdiff_t n, int len) {
        const T* d = qp + n;
        const T* p0 = ip + n - W - 1;
        const T* p1 = ip + n - 1;
        const T* p2 = ip + n + W - 1;
#pragma omp simd
        for (int l = 0; l < len; ++l) {
          const T dv = d[l];
          acc[0][l] += dv * p0[l];
          acc[1][l] += dv * p0[l + 1];
          acc[2][l] += dv * p0[l + 2];
          acc[3][l] += dv * p1[l];
          acc[4][l] += dv * p1[l + 1];
          acc[5][l] += dv * p1[l + 2];
          acc[6][l] += dv * p2[l];
          acc[7][l] += dv * p2[l + 1];
          acc[8][l] += dv * p2[l + 2];
        }
      };
      ptrdiff_t n = n0;
      for (; n + VL <= n1; n += VL) block(n, VL);
      if (n < n1) block(n, static_cast<int>(n1 - n));

      for (int t = 0; t < nye; ++t) {
        const int y = ye[t];
        const T* dr = qp + static_cast<size_t>(y) * W;
        const int ky0 = std::max(0, 1 - y), ky1 = std::min(3, H + 1 - y);
        for (int ky = ky0; ky < ky1; ++ky) {
          const T* r = ip + static_cast<size_t>(y + ky - 1) * W;
          T s0 = 0, s1 = 0, s2 = 0;
#pragma omp simd reduction(+ : s0, s1, s2)
          for (int x = 1; x < W - 1; ++x) {
            const T dv = dr[x];
            s0 += dv * r[x - 1];
            s1 += dv * r[x];
            s2 += dv * r[x + 1];
          }
          ab[ky * 3] += s0;
          ab[ky * 3 + 1] += s1;
          ab[ky * 3 + 2] += s2;
        }
        for (int u = 0; u < nxe; ++u) {
          const int x = xe[u];
          for (int ky = ky0; ky < ky1; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = x + kx - 1;
              if (ix >= 0 && ix < W)
                ab[ky * 3 + kx] += dr[x] * ip[static_cast<size_t>(y + ky - 1) * W + ix];
            }
        }
      }
      for (int y = 1; y < H - 1; ++y)
        for (int u = 0; u < nxe; ++u) {
          const int x = xe[u];
          const ptrdiff_t c = static_cast<ptrdiff_t>(y) * W + x;
          const T dv = qp[c];
          if (c >= n0 && c < n1) {
            for (int ky = 0; ky < 3; ++ky)
              for (int kx = 0; kx < 3; ++kx) {
                const int ix = x + kx - 1;
                if (ix < 0 || ix >= W)
                  ab[ky * 3 + kx] -= dv * ip[static_cast<ptrdiff_t>(y + ky - 1) * W + ix];
              }
          } else {
            for (int ky = 0; ky < 3; ++ky)
              for (int kx = 0; kx < 3; ++kx) {
                const int ix = x + kx - 1;
                if (ix >= 0 && ix < W)
                  ab[ky * 3 + kx] += dv * ip[static_cast<size_t>(y + ky - 1) * W + ix];
              }
          }
        }
      T* wk = dw + (static_cast<size_t>(co) * in.c + ci) * 9;
      for (int k = 0; k < 9; ++k) {
        T s = ab[k];
        for (int l = 0; l < VL; ++l) s += acc[k][l];
        wk[k] += s;
      }
    }
  }
}

}  // namespace

template <typename T>
void conv3x3_forward(const Tensor<T>& in, const T* w, const T* b, uint32_t out_ch,
                     uint32_t pad, Tensor<T>& out) {
  if (pad > 1) throw std::invalid_argument("conv3x3: pad must be 0 or 1");
  const int H = static_cast<int>(in.h), W = static_cast<int>(in.w), p = static_cast<int>(pad);
  const int OH = H + 2 * p - 2, OW = W + 2 * p - 2;
  if (OH < 1 || OW < 1) throw std::invalid_argument("conv3x3: input too small for valid mode");
  if (p == 1) {
    conv3x3_forward_same(in, w, b, out_ch, out);
    return;
  }
  out.resize_dirty(out_ch, static_cast<uint32_t>(OH), static_cast<uint32_t>(OW));

  // output column x reads input columns x-p .. x-p+2
  const auto cs = col_split(p, OW - p, OW);
  for (uint32_t co = 0; co < out_ch; ++co) {
    T* plane = out.plane(co);
    std::fill(plane, plane + out.plane_size(), b[co]);
    for (uint32_t ci = 0; ci < in.c; ++ci) {
      const T* wk = w + (static_cast<size_t>(co) * in.c + ci) * 9;
      for (int y = 0; y < OH; ++y) {
        T* orow = out.row(co, static_cast<uint32_t>(y));
        const int ky0 = std::max(0, p - y), ky1 = std::min(3, H + p - y);
        if (ky1 - ky0 == 3) {
          const T* r0 = in.row(ci, static_cast<uint32_t>(y - p));
          const T* r1 = r0 + W;
          const T* r2 = r1 + W;
          const T w00 = wk[0], w01 = wk[1], w02 = wk[2];
          const T w10 = wk[3], w11 = wk[4], w12 = wk[5];
          const T w20 = wk[6], w21 = wk[7], w22 = wk[8];
#pragma omp simd
          for (int x = cs.lo; x < cs.hi; ++x) {
            const int i = x - p;
            orow[x] += w00 * r0[i] + w01 * r0[i + 1] + w02 * r0[i + 2] +
                       w10 * r1[i] + w11 * r1[i + 1] + w12 * r1[i + 2] +
                       w20 * r2[i] + w21 * r2[i + 1] + w22 * r2[i + 2];
          }
        } else {
          for (int ky = ky0; ky < ky1; ++ky) {
            const T* r = in.row(ci, static_cast<uint32_t>(y + ky - p));
            const T wa = wk[ky * 3], wb = wk[ky * 3 + 1], wc = wk[ky * 3 + 2];
#pragma omp simd
            for (int x = cs.lo; x < cs.hi; ++x) {
              const int i = x - p;
              orow[x] += wa * r[i] + wb * r[i + 1] + wc * r[i + 2];
            }
          }
        }
        const auto border = [&](int x) {
          T acc = T(0);
          for (int ky = ky0; ky < ky1; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = x + kx - p;
              if (ix >= 0 && ix < W)
                acc += wk[ky * 3 + kx] *
                       in.row(ci, static_cast<uint32_t>(y + ky - p))[ix];
            }
          orow[x] += acc;
        };
        for (int x = 0; x < cs.left_end; ++x) border(x);
        for (int x = cs.right_beg; x < cs.n; ++x) border(x);
      }
    }
  }
}

template <typename T>
void conv3x3_dgrad(const Tensor<T>& dout, const T* w, uint32_t in_ch, uint32_t pad,
                   Tensor<T>& din) {
  const int p = static_cast<int>(pad);
  const int OH = static_cast<int>(dout.h), OW = static_cast<int>(dout.w);
  const int H = OH - 2 * p + 2, W = OW - 2 * p + 2;
  if (p == 1) {
    conv3x3_dgrad_same(dout, w, in_ch, din);
    return;
  }
  din.resize(in_ch, static_cast<uint32_t>(H), static_cast<uint32_t>(W));

  // din(iy,ix) += w[co,ci,ky,kx] * dout(iy-ky+p, ix-kx+p); input column ix
  // reads dout columns ix+p-2 .. ix+p
  const auto cs = col_split(2 - p, OW - p, W);
  for (uint32_t ci = 0; ci < in_ch; ++ci) {
    for (uint32_t co = 0; co < dout.c; ++co) {
      const T* wk = w + (static_cast<size_t>(co) * in_ch + ci) * 9;
      for (int iy = 0; iy < H; ++iy) {
        T* drow = din.row(ci, static_cast<uint32_t>(iy));
        const int ky0 = std::max(0, iy + p - OH + 1), ky1 = std::min(3, iy + p + 1);
        if (ky1 - ky0 == 3) {
          const T* q0 = dout.row(co, static_cast<uint32_t>(iy + p));
          const T* q1 = q0 - OW;
          const T* q2 = q1 - OW;
          const T w00 = wk[0], w01 = wk[1], w02 = wk[2];
          const T w10 = wk[3], w11 = wk[4], w12 = wk[5];
          const T w20 = wk[6], w21 = wk[7], w22 = wk[8];
#pragma omp simd
          for (int ix = cs.lo; ix < cs.hi; ++ix) {
            const int j = ix + p;
            drow[ix] += w00 * q0[j] + w01 * q0[j - 1] + w02 * q0[j - 2] +
                        w10 * q1[j] + w11 * q1[j - 1] + w12 * q1[j - 2] +
                        w20 * q2[j] + w21 * q2[j - 1] + w22 * q2[j - 2];
          }
        } else {
          for (int ky = ky0; ky < ky1; ++ky) {
            const T* q = dout.row(co, static_cast<uint32_t>(iy - ky + p));
            const T wa = wk[ky * 3], wb = wk[ky * 3 + 1], wc = wk[ky * 3 + 2];
#pragma omp simd
            for (int ix = cs.lo; ix < cs.hi; ++ix) {
              const int j = ix + p;
              drow[ix] += wa * q[j] + wb * q[j - 1] + wc * q[j - 2];
            }
          }
        }
        const auto border = [&](int ix) {
          T acc = T(0);
          for (int ky = ky0; ky < ky1; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int ox = ix - kx + p;
              if (ox >= 0 && ox < OW)
                acc += wk[ky * 3 + kx] *
                       dout.row(co, static_cast<uint32_t>(iy - ky + p))[ox];
            }
          drow[ix] += acc;
        };
        for (int ix = 0; ix < cs.left_end; ++ix) border(ix);
        for (int ix = cs.right_beg; ix < cs.n; ++ix) border(ix);
      }
    }
  }
}

template <typename T>
void conv3x3_wgrad(const Tensor<T>& in, const Tensor<T>& dout, uint32_t pad, T* dw, T* db) {
  const int p = static_cast<int>(pad);
  const int H = static_cast<int>(in.h), W = static_cast<int>(in.w);
  const int OH = static_cast<int>(dout.h), OW = static_cast<int>(dout.w);
  if (p == 1) {
    conv3x3_wgrad_same(in, dout, dw, db);
    return;
  }
  const auto cs = col_split(p, OW - p, OW);

  for (uint32_t co = 0; co < dout.c; ++co) {
    T bacc = T(0);
    const T* dplane = dout.plane(co);
    for (size_t i = 0; i < dout.plane_size(); ++i) bacc += dplane[i];
    db[co] += bacc;

    for (uint32_t ci = 0; ci < in.c; ++ci) {
      T a00 = 0, a01 = 0, a02 = 0, a10 = 0, a11 = 0, a12 = 0, a20 = 0, a21 = 0, a22 = 0;
      T ab[9] = {};  // partial-row and border-column contributions, by tap
      for (int y = 0; y < OH; ++y) {
        const T* dr = dout.row(co, static_cast<uint32_t>(y));
        const int ky0 = std::max(0, p - y), ky1 = std::min(3, H + p - y);
        if (ky1 - ky0 == 3) {
          const T* r0 = in.row(ci, static_cast<uint32_t>(y - p));
          const T* r1 = r0 + W;
          const T* r2 = r1 + W;
#pragma omp simd reduction(+ : a00, a01, a02, a10, a11, a12, a20, a21, a22)
          for (int x = cs.lo; x < cs.hi; ++x) {
            const T d = dr[x];
            const int i = x - p;
            a00 += d * r0[i];
            a01 += d * r0[i + 1];
            a02 += d * r0[i + 2];
            a10 += d * r1[i];
            a11 += d * r1[i + 1];
            a12 += d * r1[i + 2];
            a20 += d * r2[i];
            a21 += d * r2[i + 1];
            a22 += d * r2[i + 2];
          }
        } else {
          for (int ky = ky0; ky < ky1; ++ky) {
            const T* r = in.row(ci, static_cast<uint32_t>(y + ky - p));
            T s0 = 0, s1 = 0, s2 = 0;
#pragma omp simd reduction(+ : s0, s1, s2)
            for (int x = cs.lo; x < cs.hi; ++x) {
              const T d = dr[x];
              const int i = x - p;
              s0 += d * r[i];
              s1 += d * r[i + 1];
              s2 += d * r[i + 2];
            }
            ab[ky * 3] += s0;
            ab[ky * 3 + 1] += s1;
            ab[ky * 3 + 2] += s2;
          }
        }
        const auto border = [&](int x) {
          for (int ky = ky0; ky < ky1; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = x + kx - p;
              if (ix >= 0 && ix < W)
                ab[ky * 3 + kx] +=
                    dr[x] * in.row(ci, static_cast<uint32_t>(y + ky - p))[ix];
            }
        };
        for (int x = 0; x < cs.left_end; ++x) border(x);
        for (int x = cs.right_beg; x < cs.n; ++x) border(x);
      }
      T* wk = dw + (static_cast<size_t>(co) * in.c + ci) * 9;
      wk[0] += a00 + ab[0];
      wk[1] += a01 + ab[1];
      wk[2] += a02 + ab[2];
      wk[3] += a10 + ab[3];
      wk[4] += a11 + ab[4];
      wk[5] += a12 + ab[5];
      wk[6] += a20 + ab[6];
      wk[7] += a21 + ab[7];
      wk[8] += a22 + ab[8];
    }
  }
}

template <typename T>
void conv1x1_forward(const Tensor<T>& in, const T* w, const T* b, uint32_t out_ch,
                     Tensor<T>& out) {
  out.resize_dirty(out_ch, in.h, in.w);
  const int n = static_cast<int>(in.plane_size());
  for (uint32_t co = 0; co < out_ch; ++co) {
    T* plane = out.plane(co);
    std::fill(plane, plane + n, b[co]);
    for (uint32_t ci = 0; ci < in.c; ++ci)
      axpy(w[static_cast<size_t>(co) * in.c + ci], in.plane(ci), plane, n);
  }
}

template <typename T>
void conv1x1_dgrad(const Tensor<T>& dout, const T* w, uint32_t in_ch, Tensor<T>& din) {
  din.resize(in_ch, dout.h, dout.w);
  const int n = static_cast<int>(dout.plane_size());
  for (uint32_t ci = 0; ci < in_ch; ++ci)
    for (uint32_t co = 0; co < dout.c; ++co)
      axpy(w[static_cast<size_t>(co) * in_ch + ci], dout.plane(co), din.plane(ci), n);
}

template <typename T>
void conv1x1_wgrad(const Tensor<T>& in, const Tensor<T>& dout, T* dw, T* db) {
  const int n = static_cast<int>(in.plane_size());
  for (uint32_t co = 0; co < dout.c; ++co) {
    const T* dplane = dout.plane(co);
    T bacc = T(0);
    for (int i = 0; i < n; ++i) bacc += dplane[i];
    db[co] += bacc;
    for (uint32_t ci = 0; ci < in.c; ++ci)
      dw[static_cast<size_t>(co) * in.c + ci] += dot_rows(dplane, in.plane(ci), n);
  }
}

template <typename T>
void relu_inplace(Tensor<T>& t) {
  for (auto& x : t.v)
    if (x < T(0)) x = T(0);
}

template <typename T>
void relu_backward_inplace(const Tensor<T>& act, Tensor<T>& grad) {
  for (size_t i = 0; i < grad.v.size(); ++i)
    if (!(act.v[i] > T(0))) grad.v[i] = T(0);
}

template <typename T>
void maxpool2x2_forward(const Tensor<T>& in, Tensor<T>& out, std::vector<uint32_t>& argmax) {
  if (in.h % 2 != 0 || in.w % 2 != 0)
    throw std::invalid_argument("maxpool2x2: spatial dims must be even, got " +
                                std::to_string(in.h) + "x" + std::to_string(in.w));
  out.resize_dirty(in.c, in.h / 2, in.w / 2);
  argmax.resize(out.size());

  size_t o = 0;
  for (uint32_t ci = 0; ci < in.c; ++ci) {
    const size_t base = ci * in.plane_size();
    for (uint32_t y = 0; y < out.h; ++y) {
      const T* r0 = in.row(ci, 2 * y);
      const T* r1 = in.row(ci, 2 * y + 1);
      for (uint32_t x = 0; x < out.w; ++x, ++o) {
        const uint32_t x0 = 2 * x;
        T best = r0[x0];
        uint32_t idx = static_cast<uint32_t>(base + static_cast<size_t>(2 * y) * in.w + x0);
        if (r0[x0 + 1] > best) { best = r0[x0 + 1]; idx += 1; }
        const uint32_t below =
            static_cast<uint32_t>(base + static_cast<size_t>(2 * y + 1) * in.w + x0);
        if (r1[x0] > best) { best = r1[x0]; idx = below; }
        if (r1[x0 + 1] > best) { best = r1[x0 + 1]; idx = below + 1; }
        out.v[o] = best;
        argmax[o] = idx;
      }
    }
  }
}

template <typename T>
void maxpool2x2_backward(const Tensor<T>& dout, const std::vector<uint32_t>& argmax,
                         uint32_t in_h, uint32_t in_w, Tensor<T>& din) {
  din.resize(dout.c, in_h, in_w);
  for (size_t i = 0; i < dout.v.size(); ++i) din.v[argmax[i]] += dout.v[i];
}

template <typename T>
void tconv2x2_forward(const Tensor<T>& in, const T* w, const T* b, uint32_t out_ch,
                      Tensor<T>& out) {
  out.resize_dirty(out_ch, in.h * 2, in.w * 2);
  for (uint32_t co = 0; co < out_ch; ++co) {
    T* plane = out.plane(co);
    std::fill(plane, plane + out.plane_size(), b[co]);
  }
  for (uint32_t ci = 0; ci < in.c; ++ci) {
    for (uint32_t co = 0; co < out_ch; ++co) {
      const T* wk = w + (static_cast<size_t>(ci) * out_ch + co) * 4;
      for (uint32_t y = 0; y < in.h; ++y) {
        const T* src = in.row(ci, y);
        T* d0 = out.row(co, 2 * y);
        T* d1 = out.row(co, 2 * y + 1);
        for (uint32_t x = 0; x < in.w; ++x) {
          const T v = src[x];
          d0[2 * x] += wk[0] * v;
          d0[2 * x + 1] += wk[1] * v;
          d1[2 * x] += wk[2] * v;
          d1[2 * x + 1] += wk[3] * v;
        }
      }
    }
  }
}

template <typename T>
void tconv2x2_dgrad(const Tensor<T>& dout, const T* w, uint32_t in_ch, Tensor<T>& din) {
  din.resize(in_ch, dout.h / 2, dout.w / 2);
  for (uint32_t ci = 0; ci < in_ch; ++ci) {
    for (uint32_t co = 0; co < dout.c; ++co) {
      const T* wk = w + (static_cast<size_t>(ci) * dout.c + co) * 4;
      for (uint32_t y = 0; y < din.h; ++y) {
        const T* s0 = dout.row(co, 2 * y);
        const T* s1 = dout.row(co, 2 * y + 1);
        T* dst = din.row(ci, y);
        for (uint32_t x = 0; x < din.w; ++x)
          dst[x] += wk[0] * s0[2 * x] + wk[1] * s0[2 * x + 1] + wk[2] * s1[2 * x] +
                    wk[3] * s1[2 * x + 1];
      }
    }
  }
}

template <typename T>
void tconv2x2_wgrad(const Tensor<T>& in, const Tensor<T>& dout, T* dw, T* db) {
  for (uint32_t co = 0; co < dout.c; ++co) {
    T bacc = T(0);
    const T* dplane = dout.plane(co);
    for (size_t i = 0; i < dout.plane_size(); ++i) bacc += dplane[i];
    db[co] += bacc;
  }
  for (uint32_t ci = 0; ci < in.c; ++ci) {
    for (uint32_t co = 0; co < dout.c; ++co) {
      T* wk = dw + (static_cast<size_t>(ci) * dout.c + co) * 4;
      T a0 = T(0), a1 = T(0), a2 = T(0), a3 = T(0);
      for (uint32_t y = 0; y < in.h; ++y) {
        const T* src = in.row(ci, y);
        const T* d0 = dout.row(co, 2 * y);
        const T* d1 = dout.row(co, 2 * y + 1);
        for (uint32_t x = 0; x < in.w; ++x) {
          const T v = src[x];
          a0 += v * d0[2 * x];
          a1 += v * d0[2 * x + 1];
          a2 += v * d1[2 * x];
          a3 += v * d1[2 * x + 1];
        }
      }
      wk[0] += a0;
      wk[1] += a1;
      wk[2] += a2;
      wk[3] += a3;
    }
  }
}

template <typename T>
void concat_channels(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out) {
  if (a.h != b.h || a.w != b.w)
    throw std::invalid_argument("concat_channels: spatial shape mismatch");
  out.resize_dirty(a.c + b.c, a.h, a.w);
  std::copy(a.v.begin(), a.v.end(), out.v.begin());
  std::copy(b.v.begin(), b.v.end(), out.v.begin() + static_cast<ptrdiff_t>(a.size()));
}

template <typename T>
void split_channels(const Tensor<T>& dout, uint32_t a_ch, Tensor<T>& da, Tensor<T>& db) {
  if (a_ch > dout.c) throw std::invalid_argument("split_channels: a_ch exceeds channels");
  da.resize_dirty(a_ch, dout.h, dout.w);
  db.resize_dirty(dout.c - a_ch, dout.h, dout.w);
  std::copy(dout.v.begin(), dout.v.begin() + static_cast<ptrdiff_t>(da.size()), da.v.begin());
  std::copy(dout.v.begin() + static_cast<ptrdiff_t>(da.size()), dout.v.end(), db.v.begin());
}

template <typename T>
void center_crop(const Tensor<T>& in, uint32_t h, uint32_t w, Tensor<T>& out) {
  if (h > in.h || w > in.w) throw std::invalid_argument("center_crop: target larger than input");
  const uint32_t oy = (in.h - h) / 2, ox = (in.w - w) / 2;
  out.resize_dirty(in.c, h, w);
  for (uint32_t ci = 0; ci < in.c; ++ci)
    for (uint32_t y = 0; y < h; ++y)
      std::copy_n(in.row(ci, y + oy) + ox, w, out.row(ci, y));
}

template <typename T>
void center_crop_backward(const Tensor<T>& dout, uint32_t in_h, uint32_t in_w,
                          Tensor<T>& din) {
  const uint32_t oy = (in_h - dout.h) / 2, ox = (in_w - dout.w) / 2;
  din.resize(dout.c, in_h, in_w);
  for (uint32_t ci = 0; ci < dout.c; ++ci)
    for (uint32_t y = 0; y < dout.h; ++y)
      std::copy_n(dout.row(ci, y), dout.w, din.row(ci, y + oy) + ox);
}

#define TRIPLANE_INSTANTIATE_OPS(T)                                                          \
  template void conv3x3_forward<T>(const Tensor<T>&, const T*, const T*, uint32_t, uint32_t, \
                                   Tensor<T>&);                                              \
  template void conv3x3_dgrad<T>(const Tensor<T>&, const T*, uint32_t, uint32_t,             \
                                 Tensor<T>&);                                                \
  template void conv3x3_wgrad<T>(const Tensor<T>&, const Tensor<T>&, uint32_t, T*, T*);      \
  template void conv1x1_forward<T>(const Tensor<T>&, const T*, const T*, uint32_t,           \
                                   Tensor<T>&);                                              \
  template void conv1x1_dgrad<T>(const Tensor<T>&, const T*, uint32_t, Tensor<T>&);          \
  template void conv1x1_wgrad<T>(const Tensor<T>&, const Tensor<T>&, T*, T*);                \
  template void relu_inplace<T>(Tensor<T>&);                                                 \
  template void relu_backward_inplace<T>(const Tensor<T>&, Tensor<T>&);                      \
  template void maxpool2x2_forward<T>(const Tensor<T>&, Tensor<T>&, std::vector<uint32_t>&); \
  template void maxpool2x2_backward<T>(const Tensor<T>&, const std::vector<uint32_t>&,       \
                                       uint32_t, uint32_t, Tensor<T>&);                      \
  template void tconv2x2_forward<T>(const Tensor<T>&, const T*, const T*, uint32_t,          \
                                    Tensor<T>&);                                             \
  template void tconv2x2_dgrad<T>(const Tensor<T>&, const T*, uint32_t, Tensor<T>&);         \
  template void tconv2x2_wgrad<T>(const Tensor<T>&, const Tensor<T>&, T*, T*);               \
  template void concat_channels<T>(const Tensor<T>&, const Tensor<T>&, Tensor<T>&);          \
  template void split_channels<T>(const Tensor<T>&, uint32_t, Tensor<T>&, Tensor<T>&);       \
  template void center_crop<T>(const Tensor<T>&, uint32_t, uint32_t, Tensor<T>&);            \
  template void center_crop_backward<T>(const Tensor<T>&, uint32_t, uint32_t, Tensor<T>&);

TRIPLANE_INSTANTIATE_OPS(float)
TRIPLANE_INSTANTIATE_OPS(double)

}  // namespace triplane::nn
