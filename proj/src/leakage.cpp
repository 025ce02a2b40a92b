#include "fibcast/leakage.hpp"

#include <algorithm>
#include <string>

#include "fibcast/common.hpp"

namespace fibcast::leakage {
namespace {

thread_local std::vector<std::size_t> t_held_out; // sorted
thread_local int t_depth = 0;

} // namespace

Scope::Scope(std::vector<std::size_t> held_out_rows) {
    if (t_depth != 0) {
        throw Error("leakage guard: scopes do not nest");
    }
    std::sort(held_out_rows.begin(), held_out_rows.end());
    t_held_out = std::move(held_out_rows);
    t_depth = 1;
}

Scope::~Scope() {
    t_held_out.clear();
    t_depth = 0;
}

bool active() { return t_depth > 0; }

void check(std::span<const std::size_t> row_ids, const char* action) {
    if (t_depth == 0) return;
    for (const std::size_t id : row_ids) {
        if (std::binary_search(t_held_out.begin(), t_held_out.end(), id)) {
            throw LeakageError(std::string(action) +
                               ": attempted to fit on held-out row " + std::to_string(id));
        }
    }
}

} // namespace fibcast::leakage
