#pragma once

#include <map>
#include <string>
#include <vector>

#include "core/matrix.hpp"
#include "core/rng.hpp"

namespace ff {

// A flat labeled image set. Rows of `images` are flattened 28x28 pictures in
// [0, 1]; labels index classes 0..num_classes-1.
struct Dataset {
  Matrix images;
  std::vector<int> labels;
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
  void validate() const;
};

// Loads an image/label IDX pair into a Dataset. One-based label files (the
// EMNIST Letters convention of 1..26) are shifted down to zero-based.
Dataset load_dataset(const std::string& images_path, const std::string& labels_path);

enum class Scenario { ClassIncremental, DomainIncremental, TaskIncremental };

std::string scenario_name(Scenario s);

struct Task {
  Dataset train;
  Dataset test;
  // Original class ids of this task, in within-task order.
  std::vector<int> classes;
  // Original class id -> label the scenario trains/evaluates with.
  std::map<int, int> class_map;
};

struct TaskStream {
  Scenario scenario = Scenario::ClassIncremental;
  std::vector<Task> tasks;
  // Label count per task (all tasks equal); the Domain-IL shared label set is
  // {0, .., classes_per_task-1}.
  int classes_per_task = 0;
};

// Partitions the class set into `num_tasks` disjoint groups by a seeded random
// permutation and slices both splits accordingly.
//   Class IL: tasks keep original labels.
//   Domain IL: each task's labels are remapped onto the shared set.
//   Task IL: tasks keep original labels plus their task index.
TaskStream split_stream(const Dataset& train, const Dataset& test, Scenario scenario,
                        int num_tasks, Rng& rng);

// Rows of `ds.images` gathered by index; helper for batching and slicing.
Dataset select_rows(const Dataset& ds, const std::vector<std::size_t>& indices);

}  // namespace ff
