#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "norm/field.hpp"
#include "norm/linalg.hpp"

namespace norm {

// Paired input/output samples. Each input is n_in x d_a, each output
// n_out x d_u; space-time outputs use n_out = n_t * n_y with the node index
// varying fastest (row = t * n_y + y).
struct Dataset {
  std::vector<Matrix> inputs, outputs;
  std::string input_domain_id, output_domain_id;
  std::vector<std::size_t> train, test;
  std::string layout = "spatial-major";
  Eigen::Index n_t = 0;  // time nodes of space-time outputs, 0 otherwise
  std::string provenance = "{}";  // JSON object: generator, seed, parameters

  std::size_t size() const { return inputs.size(); }
  Field input(std::size_t i) const { return Field(inputs.at(i), input_domain_id); }
  Field output(std::size_t i) const { return Field(outputs.at(i), output_domain_id); }

  // Throws on ragged shapes, non-finite values or a bad split.
  void validate() const;
};

// Default split: the last N / 6 samples (by index) are the test set.
void split_five_to_one(Dataset& ds);

// .nds file: magic NORMDS1\0, u64 header length, JSON header, then all
// inputs and all outputs as little-endian float64, sample-major, row-major.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace norm
