#pragma once
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ddspamp {

// Ordered, named arrays of trainable scalars. Order is the contract for
// checkpoints, optimizer state and gradients.
class ParamStore {
public:
    struct Entry {
        std::string name;
        std::vector<double> value;
    };

    int add(std::string name, std::vector<double> value) {
        if (find(name) >= 0)
            throw std::runtime_error("ParamStore: duplicate entry '" + name + "'");
        entries_.push_back({std::move(name), std::move(value)});
        return static_cast<int>(entries_.size()) - 1;
    }
    int add_filled(std::string name, std::size_t n, double fill = 0.0) {
        return add(std::move(name), std::vector<double>(n, fill));
    }

    int find(std::string_view name) const {
        for (std::size_t i = 0; i < entries_.size(); ++i)
            if (entries_[i].name == name)
                return static_cast<int>(i);
        return -1;
    }

    Entry& at(int idx) { return entries_.at(static_cast<std::size_t>(idx)); }
    const Entry& at(int idx) const { return entries_.at(static_cast<std::size_t>(idx)); }
    Entry& by_name(std::string_view name) {
        int idx = find(name);
        if (idx < 0)
            throw std::runtime_error("ParamStore: no entry '" + std::string(name) + "'");
        return at(idx);
    }
    const Entry& by_name(std::string_view name) const {
        return const_cast<ParamStore*>(this)->by_name(name);
    }

    std::size_t size() const { return entries_.size(); }
    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& e : entries_)
            n += e.value.size();
        return n;
    }

    const std::vector<Entry>& entries() const { return entries_; }
    std::vector<Entry>& entries() { return entries_; }

private:
    std::vector<Entry> entries_;
};

// d(loss)/d(theta) for every scalar in a ParamStore, aligned entry by entry.
struct Gradient {
    std::vector<std::vector<double>> by_entry;

    double at(int entry, std::size_t idx) const {
        return by_entry.at(static_cast<std::size_t>(entry)).at(idx);
    }
    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& g : by_entry)
            n += g.size();
        return n;
    }
};

} // namespace ddspamp
