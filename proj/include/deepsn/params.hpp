#pragma once
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "deepsn/matrix.hpp"

namespace deepsn {

// Named trainable parameters with per-entry gradient and Adam moment
// buffers. Iteration order is the sorted name order everywhere, which keeps
// accumulation and updates deterministic.
class ParameterStore {
public:
    void add(const std::string& name, Matrix init); // throws DataError on duplicates

    bool has(const std::string& name) const { return entries_.count(name) != 0; }
    Matrix& value(const std::string& name);
    const Matrix& value(const std::string& name) const;
    const Matrix& grad(const std::string& name) const;

    void zero_grads();
    // grad[name] += g, shape-checked.
    void accumulate(const std::string& name, const Matrix& g);
    void scale_grads(double c);

    // Bias-corrected Adam (beta1 0.9, beta2 0.999, eps 1e-8). Advances the
    // shared step counter once per call. Throws NumericalError if any
    // gradient entry is non-finite.
    void adam_step(double lr);
    long long steps_taken() const { return t_; }
    // Moments and step counter back to zero; values stay.
    void reset_optimizer();

    std::vector<std::string> names() const;
    std::size_t size() const { return entries_.size(); }

    void for_each(const std::function<void(const std::string&, Matrix&)>& fn);

private:
    struct Entry {
        Matrix value, grad, m, v;
    };
    std::map<std::string, Entry> entries_;
    long long t_ = 0;

    Entry& at(const std::string& name);
    const Entry& at(const std::string& name) const;
};

} // namespace deepsn
