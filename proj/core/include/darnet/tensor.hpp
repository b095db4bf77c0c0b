#pragma once

#include <cstddef>
#include <algorithm>
#include <functional>
#include <new>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace darnet {

using Shape = std::vector<int>;

// Cache-line aligned storage so vectorized kernels see the same alignment on every run.
template <typename T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlignment{64};

    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept
    {
    }

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

    template <typename U>
    bool operator==(const AlignedAllocator<U>&) const noexcept
    {
        return true;
    }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array. Plain value type; gradients live on Var nodes.
template <typename T>
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, T fill = T{0});
    Tensor(Shape shape, std::vector<T> values);

    const Shape& shape() const noexcept { return shape_; }
    int rank() const noexcept { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }
    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    void fill(T v);
    // Same data, new shape of equal element count.
    Tensor reshaped(Shape shape) const;

    template <typename U>
    Tensor<U> cast() const
    {
        Tensor<U> out(shape_);
        std::copy(data_.begin(), data_.end(), out.data());
        return out;
    }

    bool operator==(const Tensor&) const = default;

private:
    Shape shape_;
    AlignedVector<T> data_;
};

template <typename T>
struct Node {
    Tensor<T> value;
    Tensor<T> grad; // empty until something flows into it
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void()> backward;

    // Adds g into grad, allocating it on first use.
    void accumulate(std::span<const T> g);
    Tensor<T>& grad_buffer();
};

// Handle on a node of the computation graph. Copies alias the same node.
template <typename T>
class Var {
public:
    Var() = default;

    static Var parameter(Tensor<T> value);
    static Var constant(Tensor<T> value);

    bool defined() const noexcept { return node_ != nullptr; }
    const Tensor<T>& value() const { return node_->value; }
    Tensor<T>& mutable_value() { return node_->value; }
    const Shape& shape() const { return node_->value.shape(); }
    bool requires_grad() const { return node_->requires_grad; }

    // Gradient accumulated by backward(); zeros when nothing has flowed in.
    Tensor<T> grad() const;
    void zero_grad();

    // Reverse-mode sweep from this scalar node with seed 1.
    void backward();

    const std::shared_ptr<Node<T>>& node() const noexcept { return node_; }
    explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

private:
    std::shared_ptr<Node<T>> node_;
};

// While alive on a thread, ops on that thread record no graph edges.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

    static bool active() noexcept;

private:
    bool previous_;
};

} // namespace darnet
