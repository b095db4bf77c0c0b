#include "darnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

#include "darnet/error.hpp"
#include "darnet/ssim_kernel.hpp"

namespace darnet::ops {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

template <typename T>
std::shared_ptr<Node<T>> make_node(Tensor<T> value, std::initializer_list<const Var<T>*> inputs)
{
    auto node = std::make_shared<Node<T>>();
    node->value = std::move(value);
    if (NoGradGuard::active())
        return node;
    for (const Var<T>* in : inputs)
        node->requires_grad = node->requires_grad || in->requires_grad();
    if (node->requires_grad)
        for (const Var<T>* in : inputs)
            node->inputs.push_back(in->node());
    return node;
}

void require_rank(const Shape& s, std::size_t rank, const char* what)
{
    if (s.size() != rank)
        throw ShapeError(std::string(what) + " expects rank " + std::to_string(rank) + ", got " + shape_string(s));
}

struct ConvGeometry {
    int channels, height, width, kernel, stride, padding, out_h, out_w;

    int patch() const { return channels * kernel * kernel; }
    int positions() const { return out_h * out_w; }
    bool pointwise() const { return kernel == 1 && stride == 1 && padding == 0; }
};

// Column buffer for output rows [row0, row1): patch x ((row1-row0) * out_w).
template <typename T>
void im2col(const T* x, const ConvGeometry& g, int row0, int row1, T* cols)
{
    const int k = g.kernel;
    const std::size_t span = static_cast<std::size_t>(row1 - row0) * g.out_w;
    for (int c = 0; c < g.channels; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                T* row = cols + static_cast<std::size_t>((c * k + ky) * k + kx) * span;
                for (int oy = row0; oy < row1; ++oy) {
                    const int iy = oy * g.stride - g.padding + ky;
                    T* dst = row + static_cast<std::size_t>(oy - row0) * g.out_w;
                    if (iy < 0 || iy >= g.height) {
                        std::fill_n(dst, g.out_w, T{0});
                        continue;
                    }
                    const T* src = x + (static_cast<std::size_t>(c) * g.height + iy) * g.width;
                    for (int ox = 0; ox < g.out_w; ++ox) {
                        const int ix = ox * g.stride - g.padding + kx;
                        dst[ox] = (ix >= 0 && ix < g.width) ? src[ix] : T{0};
                    }
                }
            }
}

template <typename T>
void col2im_add(const T* cols, const ConvGeometry& g, int row0, int row1, T* dx)
{
    const int k = g.kernel;
    const std::size_t span = static_cast<std::size_t>(row1 - row0) * g.out_w;
    for (int c = 0; c < g.channels; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const T* row = cols + static_cast<std::size_t>((c * k + ky) * k + kx) * span;
                for (int oy = row0; oy < row1; ++oy) {
                    const int iy = oy * g.stride - g.padding + ky;
                    if (iy < 0 || iy >= g.height)
                        continue;
                    const T* src = row + static_cast<std::size_t>(oy - row0) * g.out_w;
                    T* dst = dx + (static_cast<std::size_t>(c) * g.height + iy) * g.width;
                    for (int ox = 0; ox < g.out_w; ++ox) {
                        const int ix = ox * g.stride - g.padding + kx;
                        if (ix >= 0 && ix < g.width)
                            dst[ix] += src[ox];
                    }
                }
            }
}

// Output rows per im2col chunk, keeping the column buffer near 4M elements.
int rows_per_chunk(const ConvGeometry& g)
{
    constexpr std::size_t kBudget = std::size_t{1} << 22;
    const std::size_t per_row = static_cast<std::size_t>(g.patch()) * g.out_w;
    return static_cast<int>(std::clamp<std::size_t>(kBudget / std::max<std::size_t>(per_row, 1), 1, g.out_h));
}

} // namespace

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride, int padding)
{
    const Shape& xs = x.shape();
    const Shape& ws = weight.shape();
    require_rank(xs, 4, "conv2d input");
    require_rank(ws, 4, "conv2d weight");
    if (ws[1] != xs[1] || ws[2] != ws[3])
        throw ShapeError("conv2d weight " + shape_string(ws) + " incompatible with input " + shape_string(xs));
    if (bias.shape() != Shape{ws[0]})
        throw ShapeError("conv2d bias must have shape [" + std::to_string(ws[0]) + "]");
    if (stride < 1 || padding < 0)
        throw InvalidArgument("conv2d needs stride >= 1 and padding >= 0");

    ConvGeometry g{xs[1], xs[2], xs[3], ws[2], stride, padding, 0, 0};
    g.out_h = (g.height + 2 * padding - g.kernel) / stride + 1;
    g.out_w = (g.width + 2 * padding - g.kernel) / stride + 1;
    if (g.height + 2 * padding < g.kernel || g.width + 2 * padding < g.kernel)
        throw ShapeError("conv2d kernel larger than padded input");

    const int batch = xs[0];
    const int out_ch = ws[0];
    Tensor<T> out({batch, out_ch, g.out_h, g.out_w});
    const std::size_t in_stride = static_cast<std::size_t>(g.channels) * g.height * g.width;
    const std::size_t out_stride = static_cast<std::size_t>(out_ch) * g.positions();

    ConstMapMat<T> w(weight.value().data(), out_ch, g.patch());
    const int chunk = rows_per_chunk(g);
    AlignedVector<T> cols(g.pointwise() ? 0 : static_cast<std::size_t>(g.patch()) * chunk * g.out_w);
    for (int n = 0; n < batch; ++n) {
        const T* xn = x.value().data() + n * in_stride;
        MapMat<T> y(out.data() + n * out_stride, out_ch, g.positions());
        if (g.pointwise()) {
            y.noalias() = w * ConstMapMat<T>(xn, g.patch(), g.positions());
        } else {
            for (int r0 = 0; r0 < g.out_h; r0 += chunk) {
                const int r1 = std::min(g.out_h, r0 + chunk);
                const int cols_n = (r1 - r0) * g.out_w;
                im2col(xn, g, r0, r1, cols.data());
                y.middleCols(r0 * g.out_w, cols_n).noalias() = w * ConstMapMat<T>(cols.data(), g.patch(), cols_n);
            }
        }
        for (int o = 0; o < out_ch; ++o)
            y.row(o).array() += bias.value()[static_cast<std::size_t>(o)];
    }

    auto node = make_node(std::move(out), {&x, &weight, &bias});
    if (node->requires_grad) {
        Node<T>* self = node.get();
        Node<T>* xn_node = x.node().get();
        Node<T>* w_node = weight.node().get();
        Node<T>* b_node = bias.node().get();
        node->backward = [self, xn_node, w_node, b_node, g, batch, out_ch, in_stride, out_stride]() {
            ConstMapMat<T> w(w_node->value.data(), out_ch, g.patch());
            const int chunk = rows_per_chunk(g);
            AlignedVector<T> cols(g.pointwise() ? 0 : static_cast<std::size_t>(g.patch()) * chunk * g.out_w);
            AlignedVector<T> dcols(cols.size());
            RowMat<T> dw = RowMat<T>::Zero(out_ch, g.patch());
            Eigen::Matrix<T, Eigen::Dynamic, 1> db = Eigen::Matrix<T, Eigen::Dynamic, 1>::Zero(out_ch);
            for (int n = 0; n < batch; ++n) {
                ConstMapMat<T> gy(self->grad.data() + n * out_stride, out_ch, g.positions());
                const T* xn = xn_node->value.data() + n * in_stride;
                if (b_node->requires_grad)
                    db += gy.rowwise().sum();
                T* dx = xn_node->requires_grad ? xn_node->grad_buffer().data() + n * in_stride : nullptr;
                if (g.pointwise()) {
                    if (w_node->requires_grad)
                        dw.noalias() += gy * ConstMapMat<T>(xn, g.patch(), g.positions()).transpose();
                    if (dx) {
                        MapMat<T> dxm(dx, g.patch(), g.positions());
                        dxm.noalias() += w.transpose() * gy;
                    }
                    continue;
                }
                for (int r0 = 0; r0 < g.out_h; r0 += chunk) {
                    const int r1 = std::min(g.out_h, r0 + chunk);
                    const int cols_n = (r1 - r0) * g.out_w;
                    const auto gy_block = gy.middleCols(r0 * g.out_w, cols_n);
                    if (w_node->requires_grad) {
                        im2col(xn, g, r0, r1, cols.data());
                        dw.noalias() += gy_block * ConstMapMat<T>(cols.data(), g.patch(), cols_n).transpose();
                    }
                    if (dx) {
                        MapMat<T> dc(dcols.data(), g.patch(), cols_n);
                        dc.noalias() = w.transpose() * gy_block;
                        col2im_add(dcols.data(), g, r0, r1, dx);
                    }
                }
            }
            if (w_node->requires_grad)
                w_node->accumulate(std::span<const T>(dw.data(), static_cast<std::size_t>(dw.size())));
            if (b_node->requires_grad)
                b_node->accumulate(std::span<const T>(db.data(), static_cast<std::size_t>(db.size())));
        };
    }
    return Var<T>(std::move(node));
}

template <typename T>
Var<T> maxpool2(const Var<T>& x)
{
    const Shape& s = x.shape();
    require_rank(s, 4, "maxpool2");
    const int planes = s[0] * s[1];
    const int h = s[2], w = s[3];
    const int oh = (h + 1) / 2, ow = (w + 1) / 2;
    Tensor<T> out({s[0], s[1], oh, ow});
    std::vector<std::size_t> argmax(out.size());
    const T* src = x.value().data();
    for (int p = 0; p < planes; ++p) {
        const std::size_t in_base = static_cast<std::size_t>(p) * h * w;
        const std::size_t out_base = static_cast<std::size_t>(p) * oh * ow;
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                std::size_t best = in_base + static_cast<std::size_t>(2 * oy) * w + 2 * ox;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        const int iy = std::min(2 * oy + dy, h - 1);
                        const int ix = std::min(2 * ox + dx, w - 1);
                        const std::size_t idx = in_base + static_cast<std::size_t>(iy) * w + ix;
                        if (src[idx] > src[best])
                            best = idx;
                    }
                const std::size_t o = out_base + static_cast<std::size_t>(oy) * ow + ox;
                out[o] = src[best];
                argmax[o] = best;
            }
    }
    auto node = make_node(std::move(out), {&x});
    if (node->requires_grad) {
        Node<T>* self = node.get();
        Node<T>* in = x.node().get();
        node->backward = [self, in, argmax = std::move(argmax)]() {
            T* dx = in->grad_buffer().data();
            for (std::size_t o = 0; o < argmax.size(); ++o)
                dx[argmax[o]] += self->grad[o];
        };
    }
    return Var<T>(std::move(node));
}

template <typename T>
Var<T> upsample_nearest2(const Var<T>& x)
{
    const Shape& s = x.shape();
    require_rank(s, 4, "upsample_nearest2");
    const int planes = s[0] * s[1];
    const int h = s[2], w = s[3];
    Tensor<T> out({s[0], s[1], 2 * h, 2 * w});
    const T* src = x.value().data();
    for (int p = 0; p < planes; ++p)
        for (int y = 0; y < 2 * h; ++y)
            for (int xx = 0; xx < 2 * w; ++xx)
                out[(static_cast<std::size_t>(p) * 2 * h + y) * 2 * w + xx] =
                    src[(static_cast<std::size_t>(p) * h + y / 2) * w + xx / 2];
    auto node = make_node(std::move(out), {&x});
    if (node->requires_grad) {
        Node<T>* self = node.get();
        Node<T>* in = x.node().get();
        node->backward = [self, in, planes, h, w]() {
            T* dx = in->grad_buffer().data();
            for (int p = 0; p < planes; ++p)
                for (int y = 0; y < 2 * h; ++y)
                    for (int xx = 0; xx < 2 * w; ++xx)
                        dx[(static_cast<std::size_t>(p) * h + y / 2) * w + xx / 2] +=
                            self->grad[(static_cast<std::size_t>(p) * 2 * h + y) * 2 * w + xx];
        };
    }
    return Var<T>(std::move(node));
}

template <typename T>
Var<T> relu(const Var<T>& x)
{
    Tensor<T> out = x.value();
    for (T& v : out.values())
        v = v > T{0} ? v : T{0};
    auto node = make_node(std::move(out), {&x});
    if (node->requires_grad) {
        Node<T>* self = node.get();
        Node<T>* in = x.node().get();
        node->backward = [self, in]() {
            T* dx = in->grad_buffer().data();
            for (std::size_t i = 0; i < self->value.size(); ++i)
                if (self->value[i] > T{0})
                    dx[i] += self->grad[i];
        };
    }
    return Var<T>(std::move(node));
}

template <typename T>
Var<T> sigmoid(const Var<T>& x)
{
    Tensor<T> out = x.value();
    for (T& v : out.values())
        v = v >= T{0} ? T{1} / (T{1} + std::exp(-v)) : std::exp(v) / (T{1} + std::exp(v));
    auto node = make_node(std::move(out), {&x});
    if (node->requires_grad) {
        Node<T>* self = node.get();
        Node<T>* in = x.node().get();
        node->backward = [self, in]() {
            T* dx = in->grad_buffer().data();
            for (std::size_t i = 0; i < self->value.size(); ++i) {
                const T s = self->value[i];
                dx[i] += self->grad[i] * s * (T{1} - s);
            }
        };
    }
    return Var<T>(std::move(node));
}

template <typename T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b)
{
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    require_rank(sa, 4, "concat_channels");
    require_rank(sb, 4, "concat_channels");
    if (sa[0] != sb[0] || sa[2] != sb[2] || sa[3] != sb[3])
        throw ShapeError("concat_channels shape mismatch " + shape_string(sa) + " vs " + shape_string(sb));
    const int n = sa[0];
    const std::size_t plane = static_cast<std::size_t>(sa[2]) * sa[3];
    const std::size_t ca = static_cast<std::size_t>(sa[1]) * plane;
    const std::size_t cb = static_cast<std::size_t>(sb[1]) * plane;
    Tensor<T> out({n, sa[1] + sb[1], sa[2], sa[3]});
    for (int i = 0; i < n; ++i) {
        std::copy_n(a.value().data() + i * ca, ca, out.data() + i * (ca + cb));
        std::copy_n(b.value().data() + i * cb, cb, out.data() + i * (ca + cb) + ca);
    }
    auto node = make_node(std::move(out), {&a, &b});
    if (node->requires_grad) {
        Node<T>* self = node.get();
        Node<T>* na = a.node().get();
        Node<T>* nb = b.node().get();
        node->backward = [self, na, nb, n, ca, cb]() {
            for (int i = 0; i < n; ++i) {
                const T* g = self->grad.data() + i * (ca + cb);
                if (na->requires_grad) {
                    T* d = na->grad_buffer().data() + i * ca;
                    for (std::size_t j = 0; j < ca; ++j)
                        d[j] += g[j];
                }
                if (nb->requires_grad) {
                    T* d = nb->grad_buffer().data() + i * cb;
                    for (std::size_t j = 0; j < cb; ++j)
                        d[j] += g[ca + j];
                }
            }
        };
    }
    return Var<T>(std::move(node));
}

template <typename T>
Var<T> global_avg_pool(const Var<T>& x)
{
    const Shape& s = x.shape();
    require_rank(s, 4, "global_avg_pool");
    const int planes = s[0] * s[1];
    const std::size_t area = static_cast<std::size_t>(s[2]) * s[3];
    Tensor<T> out({s[0], s[1]});
    for (int p = 0; p < planes; ++p) {
        T acc{0};
        const T* src = x.value().data() + p * area;
        for (std::size_t i = 0; i < area; ++i)
            acc += src[i];
        out[static_cast<std::size_t>(p)] = acc / static_cast<T>(area);
    }
    auto node = make_node(std::move(out), {&x});
    if (node->requires_grad) {
        Node<T>* self = node.get();
        Node<T>* in = x.node().get();
        node->backward = [self, in, planes, area]() {
            T* dx = in->grad_buffer().data();
            for (int p = 0; p < planes; ++p) {
                const T g = self->grad[static_cast<std::size_t>(p)] / static_cast<T>(area);
                for (std::size_t i = 0; i < area; ++i)
                    dx[p * area + i] += g;
            }
        };
    }
    return Var<T>(std::move(node));
}

template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias)
{
    require_rank(x.shape(), 2, "linear input");
    require_rank(weight.shape(), 2, "linear weight");
    const int n = x.shape()[0], f = x.shape()[1], c = weight.shape()[0];
    if (weight.shape()[1] != f || bias.shape() != Shape{c})
        throw ShapeError("linear weight/bias shapes incompatible with input " + shape_string(x.shape()));
    Tensor<T> out({n, c});
    ConstMapMat<T> xm(x.value().data(), n, f);
    ConstMapMat<T> wm(weight.value().data(), c, f);
    MapMat<T> ym(out.data(), n, c);
    ym.noalias() = xm * wm.transpose();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j)
            ym(i, j) += bias.value()[static_cast<std::size_t>(j)];
    auto node = make_node(std::move(out), {&x, &weight, &bias});
    if (node->requires_grad) {
        Node<T>* self = node.get();
        Node<T>* nx = x.node().get();
        Node<T>* nw = weight.node().get();
        Node<T>* nb = bias.node().get();
        node->backward = [self, nx, nw, nb, n, f, c]() {
            ConstMapMat<T> gy(self->grad.data(), n, c);
            if (nx->requires_grad) {
                MapMat<T> dx(nx->grad_buffer().data(), n, f);
                dx.noalias() += gy * ConstMapMat<T>(nw->value.data(), c, f);
            }
            if (nw->requires_grad) {
                MapMat<T> dw(nw->grad_buffer().data(), c, f);
                dw.noalias() += gy.transpose() * ConstMapMat<T>(nx->value.data(), n, f);
            }
            if (nb->requires_grad) {
                T* db = nb->grad_buffer().data();
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < c; ++j)
                        db[j] += gy(i, j);
            }
        };
    }
    return Var<T>(std::move(node));
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits)
{
    require_rank(logits.shape(), 2, "softmax");
    const int n = logits.dim(0), c = logits.dim(1);
    Tensor<T> p(logits.shape());
    for (int i = 0; i < n; ++i) {
        const T* row = logits.data() + static_cast<std::size_t>(i) * c;
        const T mx = *std::max_element(row, row + c);
        T sum{0};
        for (int j = 0; j < c; ++j)
            sum += p[static_cast<std::size_t>(i) * c + j] = std::exp(row[j] - mx);
        for (int j = 0; j < c; ++j)
            p[static_cast<std::size_t>(i) * c + j] /= sum;
    }
    return p;
}

template <typename T>
Var<T> softmax_cross_entropy(const Var<T>& logits, std::span<const int> labels)
{
    require_rank(logits.shape(), 2, "softmax_cross_entropy");
    const int n = logits.shape()[0], c = logits.shape()[1];
    if (static_cast<int>(labels.size()) != n)
        throw ShapeError("label count does not match batch size");
    for (int l : labels)
        if (l < 0 || l >= c)
            throw InvalidArgument("label " + std::to_string(l) + " out of range for " + std::to_string(c) + " classes");

    Tensor<T> probs = softmax(logits.value());
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        const T* row = logits.value().data() + static_cast<std::size_t>(i) * c;
        const T mx = *std::max_element(row, row + c);
        double sum = 0.0;
        for (int j = 0; j < c; ++j)
            sum += std::exp(static_cast<double>(row[j] - mx));
        loss += std::log(sum) - static_cast<double>(row[labels[static_cast<std::size_t>(i)]] - mx);
    }
    Tensor<T> out({1}, static_cast<T>(loss / n));
    auto node = make_node(std::move(out), {&logits});
    if (node->requires_grad) {
        Node<T>* self = node.get();
        Node<T>* in = logits.node().get();
        node->backward = [self, in, probs = std::move(probs), lab = std::vector<int>(labels.begin(), labels.end()), n, c]() {
            T* dx = in->grad_buffer().data();
            const T scale = self->grad[0] / static_cast<T>(n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < c; ++j) {
                    const std::size_t k = static_cast<std::size_t>(i) * c + j;
                    dx[k] += scale * (probs[k] - (j == lab[static_cast<std::size_t>(i)] ? T{1} : T{0}));
                }
        };
    }
    return Var<T>(std::move(node));
}

template <typename T>
Var<T> hybrid_loss(const Var<T>& pred, const Tensor<T>& ref, double alpha)
{
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw InvalidArgument("loss alpha must lie in [0,1]");
    const Shape& s = pred.shape();
    require_rank(s, 4, "hybrid_loss");
    if (ref.shape() != s)
        throw ShapeError("hybrid_loss reference shape " + shape_string(ref.shape()) + " differs from " + shape_string(s));
    const int n = s[0], c = s[1], h = s[2], w = s[3];
    if (alpha > 0.0 && std::min(h, w) < detail::kSsimWindow)
        throw ShapeError("hybrid_loss needs at least 11x11 images when alpha > 0");

    const std::size_t total = pred.value().size();
    const std::size_t area = static_cast<std::size_t>(h) * w;
    double l1 = 0.0;
    for (std::size_t i = 0; i < total; ++i)
        l1 += std::abs(static_cast<double>(pred.value()[i]) - ref[i]);
    l1 /= static_cast<double>(total);

    const bool want_grad = pred.requires_grad() && !NoGradGuard::active();
    double ssim_mean = 0.0;
    std::vector<double> ssim_grad;
    if (alpha > 0.0) {
        if (want_grad)
            ssim_grad.assign(total, 0.0);
        std::vector<double> xp(area), yp(area), g;
        for (int p = 0; p < n * c; ++p) {
            const T* xs = pred.value().data() + p * area;
            const T* ys = ref.data() + p * area;
            for (std::size_t i = 0; i < area; ++i) {
                xp[i] = xs[i];
                yp[i] = ys[i];
            }
            const auto r = detail::ssim_plane(xp, yp, h, w, want_grad ? &g : nullptr);
            const double scale = 1.0 / (static_cast<double>(r.count) * n * c);
            ssim_mean += r.sum * scale;
            if (want_grad)
                for (std::size_t i = 0; i < area; ++i)
                    ssim_grad[p * area + i] = g[i] * scale;
        }
    }
    const double loss = alpha * (1.0 - ssim_mean) + (1.0 - alpha) * l1;
    auto node = make_node(Tensor<T>({1}, static_cast<T>(loss)), {&pred});
    if (node->requires_grad) {
        Node<T>* self = node.get();
        Node<T>* in = pred.node().get();
        node->backward = [self, in, ref, alpha, total, ssim_grad = std::move(ssim_grad)]() {
            T* dx = in->grad_buffer().data();
            const double upstream = self->grad[0];
            const double l1_scale = (1.0 - alpha) / static_cast<double>(total);
            for (std::size_t i = 0; i < total; ++i) {
                const double d = static_cast<double>(in->value[i]) - ref[i];
                double g = d > 0 ? l1_scale : (d < 0 ? -l1_scale : 0.0);
                if (!ssim_grad.empty())
                    g -= alpha * ssim_grad[i];
                dx[i] += static_cast<T>(upstream * g);
            }
        };
    }
    return Var<T>(std::move(node));
}

template <typename T>
Var<T> weighted_sum(const Var<T>& x, const Tensor<T>& weights)
{
    if (weights.shape() != x.shape())
        throw ShapeError("weighted_sum weight shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i)
        acc += static_cast<double>(x.value()[i]) * weights[i];
    auto node = make_node(Tensor<T>({1}, static_cast<T>(acc)), {&x});
    if (node->requires_grad) {
        Node<T>* self = node.get();
        Node<T>* in = x.node().get();
        node->backward = [self, in, weights]() {
            T* dx = in->grad_buffer().data();
            for (std::size_t i = 0; i < weights.size(); ++i)
                dx[i] += self->grad[0] * weights[i];
        };
    }
    return Var<T>(std::move(node));
}

#define DARNET_INSTANTIATE_OPS(T)                                                                  \
    template Var<T> conv2d(const Var<T>&, const Var<T>&, const Var<T>&, int, int);                 \
    template Var<T> maxpool2(const Var<T>&);                                                       \
    template Var<T> upsample_nearest2(const Var<T>&);                                              \
    template Var<T> relu(const Var<T>&);                                                           \
    template Var<T> sigmoid(const Var<T>&);                                                        \
    template Var<T> concat_channels(const Var<T>&, const Var<T>&);                                 \
    template Var<T> global_avg_pool(const Var<T>&);                                                \
    template Var<T> linear(const Var<T>&, const Var<T>&, const Var<T>&);                           \
    template Var<T> softmax_cross_entropy(const Var<T>&, std::span<const int>);                    \
    template Tensor<T> softmax(const Tensor<T>&);                                                  \
    template Var<T> hybrid_loss(const Var<T>&, const Tensor<T>&, double);                          \
    template Var<T> weighted_sum(const Var<T>&, const Tensor<T>&);

DARNET_INSTANTIATE_OPS(float)
DARNET_INSTANTIATE_OPS(double)

} // namespace darnet::ops
