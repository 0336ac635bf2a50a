#include "deepsn/params.hpp"

#include <cmath>

#include "deepsn/errors.hpp"

namespace deepsn {

ParameterStore::Entry& ParameterStore::at(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw DataError("unknown parameter: " + name);
    return it->second;
}

const ParameterStore::Entry& ParameterStore::at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw DataError("unknown parameter: " + name);
    return it->second;
}

void ParameterStore::add(const std::string& name, Matrix init) {
    if (entries_.count(name)) throw DataError("duplicate parameter: " + name);
    Entry e;
    e.grad = Matrix(init.rows(), init.cols());
    e.m = Matrix(init.rows(), init.cols());
    e.v = Matrix(init.rows(), init.cols());
    e.value = std::move(init);
    entries_.emplace(name, std::move(e));
}

Matrix& ParameterStore::value(const std::string& name) { return at(name).value; }
const Matrix& ParameterStore::value(const std::string& name) const { return at(name).value; }
const Matrix& ParameterStore::grad(const std::string& name) const { return at(name).grad; }

void ParameterStore::zero_grads() {
    for (auto& [name, e] : entries_)
        for (double& g : e.grad.vec()) g = 0.0;
}

void ParameterStore::accumulate(const std::string& name, const Matrix& g) {
    Entry& e = at(name);
    if (!e.grad.same_shape(g)) throw DataError("gradient shape mismatch for " + name);
    e.grad += g;
}

void ParameterStore::scale_grads(double c) {
    for (auto& [name, e] : entries_)
        for (double& g : e.grad.vec()) g *= c;
}

void ParameterStore::adam_step(double lr) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    ++t_;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (auto& [name, e] : entries_) {
        const std::size_t total = e.value.vec().size();
        for (std::size_t i = 0; i < total; ++i) {
            const double g = e.grad.vec()[i];
            if (!std::isfinite(g)) throw NumericalError("non-finite gradient in " + name);
            double& m = e.m.vec()[i];
            double& v = e.v.vec()[i];
            m = beta1 * m + (1.0 - beta1) * g;
            v = beta2 * v + (1.0 - beta2) * g * g;
            const double mhat = m / c1;
            const double vhat = v / c2;
            e.value.vec()[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

void ParameterStore::reset_optimizer() {
    t_ = 0;
    for (auto& [name, e] : entries_) {
        for (double& x : e.m.vec()) x = 0.0;
        for (double& x : e.v.vec()) x = 0.0;
    }
}

std::vector<std::string> ParameterStore::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, e] : entries_) out.push_back(name);
    return out;
}

void ParameterStore::for_each(const std::function<void(const std::string&, Matrix&)>& fn) {
    for (auto& [name, e] : entries_) fn(name, e.value);
}

} // namespace deepsn
