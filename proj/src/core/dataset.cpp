#include "core/dataset.hpp"

#include <algorithm>
#include <cstring>

#include "core/error.hpp"
#include "core/idx.hpp"

namespace ff {

void Dataset::validate() const {
  if (images.rows() != labels.size()) {
    raise(Errc::dimension_mismatch,
          "dataset: " + std::to_string(images.rows()) + " image rows vs " +
              std::to_string(labels.size()) + " labels");
  }
  for (int label : labels) {
    if (label < 0 || label >= num_classes) {
      raise(Errc::invalid_argument,
            "dataset: label " + std::to_string(label) + " outside 0.." +
                std::to_string(num_classes - 1));
    }
  }
  for (double v : images.data()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      raise(Errc::invalid_argument, "dataset: pixel outside [0, 1]");
    }
  }
}

Dataset load_dataset(const std::string& images_path, const std::string& labels_path) {
  Dataset ds;
  ds.images = load_idx_images(images_path);
  ds.labels = load_idx_labels(labels_path);
  if (ds.images.rows() != ds.labels.size()) {
    raise(Errc::dimension_mismatch,
          "dataset: image file " + images_path + " has " +
              std::to_string(ds.images.rows()) + " rows but label file has " +
              std::to_string(ds.labels.size()));
  }
  if (!ds.labels.empty()) {
    const int min_label = *std::min_element(ds.labels.begin(), ds.labels.end());
    if (min_label == 1) {
      // One-based label files (EMNIST Letters) become zero-based here.
      for (int& label : ds.labels) --label;
    }
    ds.num_classes = *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
  }
  return ds;
}

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::ClassIncremental: return "class";
    case Scenario::DomainIncremental: return "domain";
    case Scenario::TaskIncremental: return "task";
  }
  return "?";
}

Dataset select_rows(const Dataset& ds, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.num_classes = ds.num_classes;
  out.images = Matrix(indices.size(), ds.images.cols());
  out.labels.resize(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::memcpy(out.images.row(i), ds.images.row(indices[i]),
                ds.images.cols() * sizeof(double));
    out.labels[i] = ds.labels[indices[i]];
  }
  return out;
}

namespace {

Dataset slice_classes(const Dataset& ds, const std::vector<int>& classes,
                      const std::map<int, int>& class_map, bool remap, int num_classes) {
  std::vector<std::size_t> indices;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (std::find(classes.begin(), classes.end(), ds.labels[i]) != classes.end()) {
      indices.push_back(i);
    }
  }
  Dataset out = select_rows(ds, indices);
  if (remap) {
    for (int& label : out.labels) label = class_map.at(label);
  }
  out.num_classes = num_classes;
  return out;
}

}  // namespace

TaskStream split_stream(const Dataset& train, const Dataset& test, Scenario scenario,
                        int num_tasks, Rng& rng) {
  if (num_tasks < 1) raise(Errc::invalid_argument, "split_stream: need at least 1 task");
  if (train.num_classes % num_tasks != 0) {
    raise(Errc::invalid_argument,
          "split_stream: " + std::to_string(train.num_classes) +
              " classes not divisible into " + std::to_string(num_tasks) + " tasks");
  }
  const int per_task = train.num_classes / num_tasks;

  const std::vector<std::size_t> perm = rng.permutation(train.num_classes);

  TaskStream stream;
  stream.scenario = scenario;
  stream.classes_per_task = per_task;
  for (int t = 0; t < num_tasks; ++t) {
    Task task;
    for (int j = 0; j < per_task; ++j) {
      task.classes.push_back(static_cast<int>(perm[t * per_task + j]));
    }
    for (int j = 0; j < per_task; ++j) {
      const int original = task.classes[j];
      switch (scenario) {
        case Scenario::ClassIncremental:
          task.class_map[original] = original;
          break;
        case Scenario::DomainIncremental:
        case Scenario::TaskIncremental:
          task.class_map[original] = j;
          break;
      }
    }
    const bool remap = scenario == Scenario::DomainIncremental;
    const int classes = remap ? per_task : train.num_classes;
    task.train = slice_classes(train, task.classes, task.class_map, remap, classes);
    task.test = slice_classes(test, task.classes, task.class_map, remap, classes);
    stream.tasks.push_back(std::move(task));
  }
  return stream;
}

}  // namespace ff
