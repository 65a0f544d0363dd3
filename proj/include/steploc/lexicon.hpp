#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace steploc {

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Domain {
    int id = 0;
    std::string name;
    bool operator==(const Domain&) const = default;
};

struct Task {
    int id = 0;
    std::string name;
    int domain_id = 0;
    bool operator==(const Task&) const = default;
};

struct Step {
    int id = 0;
    std::string label;
    int task_id = 0;
    bool operator==(const Step&) const = default;
};

/// Three-level taxonomy: domains contain tasks, tasks contain steps.
/// Ids are dense and equal to the position in file order; labels are metadata.
struct Lexicon {
    std::vector<Domain> domains;
    std::vector<Task> tasks;
    std::vector<Step> steps;

    int step_count() const { return static_cast<int>(steps.size()); }
    int task_count() const { return static_cast<int>(tasks.size()); }

    bool operator==(const Lexicon&) const = default;
};

namespace detail {

inline void check_dense_ids(const std::vector<int>& ids, const char* kind) {
    std::vector<bool> seen(ids.size(), false);
    for (std::size_t pos = 0; pos < ids.size(); ++pos) {
        const int id = ids[pos];
        if (id >= 0 && static_cast<std::size_t>(id) < ids.size() && seen[id]) {
            throw ValidationError(std::string("duplicate ") + kind + " id " + std::to_string(id));
        }
        if (id != static_cast<int>(pos)) {
            throw ValidationError(std::string(kind) + " ids must be dense 0..N-1 in file order (got " +
                                  std::to_string(id) + " at position " + std::to_string(pos) + ")");
        }
        seen[id] = true;
    }
}

} // namespace detail

inline void validate_lexicon(const Lexicon& lex) {
    if (lex.domains.empty()) throw ValidationError("lexicon has no domains");
    if (lex.tasks.empty()) throw ValidationError("lexicon has no tasks");
    if (lex.steps.empty()) throw ValidationError("lexicon has no steps");

    std::vector<int> ids;
    ids.reserve(lex.domains.size());
    for (const auto& d : lex.domains) ids.push_back(d.id);
    detail::check_dense_ids(ids, "domain");
    ids.clear();
    for (const auto& t : lex.tasks) ids.push_back(t.id);
    detail::check_dense_ids(ids, "task");
    ids.clear();
    for (const auto& s : lex.steps) ids.push_back(s.id);
    detail::check_dense_ids(ids, "step");

    for (const auto& t : lex.tasks) {
        if (t.domain_id < 0 || t.domain_id >= static_cast<int>(lex.domains.size()))
            throw ValidationError("task " + std::to_string(t.id) + " references unknown domain " +
                                  std::to_string(t.domain_id));
    }
    std::vector<int> steps_per_task(lex.tasks.size(), 0);
    for (const auto& s : lex.steps) {
        if (s.task_id < 0 || s.task_id >= static_cast<int>(lex.tasks.size()))
            throw ValidationError("step " + std::to_string(s.id) + " references unknown task " +
                                  std::to_string(s.task_id));
        ++steps_per_task[s.task_id];
    }
    for (std::size_t j = 0; j < steps_per_task.size(); ++j) {
        if (steps_per_task[j] == 0)
            throw ValidationError("empty task " + std::to_string(j) + " (no steps)");
    }
}

/// Binary step-to-task membership, K rows (steps) by M columns (tasks).
/// Each row has exactly one nonzero entry.
struct MembershipMatrix {
    int num_steps = 0;
    int num_tasks = 0;
    std::vector<std::uint8_t> w;        // row-major K x M
    std::vector<int> task_of;           // task id per step
    std::vector<int> steps_per_task;

    std::uint8_t at(int step, int task) const {
        return w[static_cast<std::size_t>(step) * num_tasks + task];
    }
};

inline MembershipMatrix build_membership(const Lexicon& lex) {
    MembershipMatrix m;
    m.num_steps = lex.step_count();
    m.num_tasks = lex.task_count();
    m.w.assign(static_cast<std::size_t>(m.num_steps) * m.num_tasks, 0);
    m.task_of.resize(m.num_steps);
    m.steps_per_task.assign(m.num_tasks, 0);
    for (const auto& s : lex.steps) {
        m.w[static_cast<std::size_t>(s.id) * m.num_tasks + s.task_id] = 1;
        m.task_of[s.id] = s.task_id;
        ++m.steps_per_task[s.task_id];
    }
    return m;
}

} // namespace steploc
