#pragma once

// Dense row-major 2-D and 3-D containers backing every pipeline type.

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace depthbin {

template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int height, int width, T fill = T{})
        : h_(height), w_(width), data_(checked_size(height, width), fill) {}
    Grid(int height, int width, std::vector<T> values)
        : h_(height), w_(width), data_(std::move(values)) {
        if (data_.size() != checked_size(height, width))
            throw std::invalid_argument("Grid: value count does not match height*width");
    }

    int height() const { return h_; }
    int width() const { return w_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& at(int y, int x) { return data_[index(y, x)]; }
    const T& at(int y, int x) const { return data_[index(y, x)]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    T* row(int y) { return data_.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(w_); }
    const T* row(int y) const { return data_.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(w_); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    template <typename U>
    bool same_shape(const Grid<U>& other) const {
        return h_ == other.height() && w_ == other.width();
    }
    bool operator==(const Grid& other) const = default;

private:
    static std::size_t checked_size(int h, int w) {
        if (h < 1 || w < 1) throw std::invalid_argument("Grid: dimensions must be >= 1");
        return static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
    }
    std::size_t index(int y, int x) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(w_) + static_cast<std::size_t>(x);
    }

    int h_ = 0;
    int w_ = 0;
    std::vector<T> data_;
};

// Channel-major stack of planes (C x H x W).
template <typename T>
class Volume {
public:
    Volume() = default;
    Volume(int channels, int height, int width, T fill = T{})
        : c_(channels), h_(height), w_(width), data_(checked_size(channels, height, width), fill) {}
    Volume(int channels, int height, int width, std::vector<T> values)
        : c_(channels), h_(height), w_(width), data_(std::move(values)) {
        if (data_.size() != checked_size(channels, height, width))
            throw std::invalid_argument("Volume: value count does not match channels*height*width");
    }

    int channels() const { return c_; }
    int height() const { return h_; }
    int width() const { return w_; }
    std::size_t size() const { return data_.size(); }
    std::size_t plane_size() const { return static_cast<std::size_t>(h_) * static_cast<std::size_t>(w_); }

    T& at(int c, int y, int x) { return data_[index(c, y, x)]; }
    const T& at(int c, int y, int x) const { return data_[index(c, y, x)]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    T* plane(int c) { return data_.data() + static_cast<std::size_t>(c) * plane_size(); }
    const T* plane(int c) const { return data_.data() + static_cast<std::size_t>(c) * plane_size(); }
    T* row(int c, int y) { return plane(c) + static_cast<std::size_t>(y) * static_cast<std::size_t>(w_); }
    const T* row(int c, int y) const { return plane(c) + static_cast<std::size_t>(y) * static_cast<std::size_t>(w_); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    template <typename U>
    bool same_shape(const Volume<U>& other) const {
        return c_ == other.channels() && h_ == other.height() && w_ == other.width();
    }
    template <typename U>
    bool same_plane_shape(const Volume<U>& other) const {
        return h_ == other.height() && w_ == other.width();
    }
    bool operator==(const Volume& other) const = default;

private:
    static std::size_t checked_size(int c, int h, int w) {
        if (c < 0 || h < 1 || w < 1) throw std::invalid_argument("Volume: invalid dimensions");
        return static_cast<std::size_t>(c) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
    }
    std::size_t index(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * static_cast<std::size_t>(h_) + static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(w_) +
               static_cast<std::size_t>(x);
    }

    int c_ = 0;
    int h_ = 0;
    int w_ = 0;
    std::vector<T> data_;
};

}  // namespace depthbin
