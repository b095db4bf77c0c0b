#include "darnet/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "darnet/error.hpp"

namespace darnet {

std::size_t shape_size(const Shape& shape)
{
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0)
            throw ShapeError("negative dimension in shape " + shape_string(shape));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

std::string shape_string(const Shape& shape)
{
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i)
            s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill)
{
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values) : shape_(std::move(shape)), data_(values.begin(), values.end())
{
    if (data_.size() != shape_size(shape_))
        throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_string(shape_));
}

template <typename T>
void Tensor<T>::fill(T v)
{
    std::fill(data_.begin(), data_.end(), v);
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const
{
    if (shape_size(shape) != data_.size())
        throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_string(shape));
    Tensor out;
    out.shape_ = std::move(shape);
    out.data_ = data_;
    return out;
}

template <typename T>
void Node<T>::accumulate(std::span<const T> g)
{
    auto& buf = grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i)
        buf[i] += g[i];
}

template <typename T>
Tensor<T>& Node<T>::grad_buffer()
{
    if (grad.size() != value.size() || grad.shape() != value.shape())
        grad = Tensor<T>(value.shape());
    return grad;
}

template <typename T>
Var<T> Var<T>::parameter(Tensor<T> value)
{
    auto node = std::make_shared<Node<T>>();
    node->value = std::move(value);
    node->requires_grad = true;
    return Var(std::move(node));
}

template <typename T>
Var<T> Var<T>::constant(Tensor<T> value)
{
    auto node = std::make_shared<Node<T>>();
    node->value = std::move(value);
    return Var(std::move(node));
}

template <typename T>
Tensor<T> Var<T>::grad() const
{
    if (node_->grad.shape() == node_->value.shape())
        return node_->grad;
    return Tensor<T>(node_->value.shape());
}

template <typename T>
void Var<T>::zero_grad()
{
    node_->grad = Tensor<T>();
}

template <typename T>
void Var<T>::backward()
{
    if (node_->value.size() != 1)
        throw ShapeError("backward() needs a scalar output, got " + shape_string(node_->value.shape()));

    // Iterative post-order DFS yields a topological order.
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> visited;
    std::vector<std::pair<Node<T>*, std::size_t>> stack{{node_.get(), 0}};
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node<T>* child = node->inputs[next++].get();
            if (child->requires_grad && visited.insert(child).second)
                stack.emplace_back(child, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    node_->grad_buffer()[0] += T{1};
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node<T>* node = *it;
        if (node->backward && node->grad.size() == node->value.size())
            node->backward();
    }
}

namespace {
thread_local bool g_no_grad = false;
}

NoGradGuard::NoGradGuard() : previous_(g_no_grad) { g_no_grad = true; }
NoGradGuard::~NoGradGuard() { g_no_grad = previous_; }
bool NoGradGuard::active() noexcept { return g_no_grad; }

template class Tensor<float>;
template class Tensor<double>;
template struct Node<float>;
template struct Node<double>;
template class Var<float>;
template class Var<double>;

} // namespace darnet
