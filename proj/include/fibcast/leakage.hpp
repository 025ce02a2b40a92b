#ifndef FIBCAST_LEAKAGE_HPP
#define FIBCAST_LEAKAGE_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace fibcast::leakage {

// Evaluation harnesses mark the rows held out for testing; while a scope
// is active, any fit (standardizer or model) that touches one of those
// rows throws LeakageError. Row identity travels in FeatureMatrix::row_ids.
class Scope {
public:
    explicit Scope(std::vector<std::size_t> held_out_rows);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;
};

bool active();

// Throws LeakageError naming `action` if any of row_ids is held out.
void check(std::span<const std::size_t> row_ids, const char* action);

} // namespace fibcast::leakage

#endif
