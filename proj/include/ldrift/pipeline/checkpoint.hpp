#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ldrift/numkit/tensor.hpp"

namespace ldrift::pipeline {

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

// Checksum over names, shapes and the raw bits of every tensor, in the given order.
std::uint64_t params_checksum(const std::vector<std::pair<std::string, const numkit::Tensor*>>& named);

// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

// Single-file container: magic, format version, then named sections sorted by
// name, each either a float64 tensor with a (rows, cols) prefix or UTF-8 text,
// and a trailing FNV-1a checksum of everything before it. Little-endian.
class Checkpoint {
 public:
  static constexpr std::uint32_t kVersion = 1;

  void put(const std::string& name, const numkit::Tensor& tensor);
  void put_text(const std::string& name, const std::string& text);
  bool has(const std::string& name) const;
  bool has_block(const std::string& block) const;  // any tensor named "<block>/..."
  const numkit::Tensor& tensor(const std::string& name) const;
  const std::string& text(const std::string& name) const;
  // Removes every tensor under "<block>/".
  void erase_block(const std::string& block);

  // Stores each tensor as "<block>/<name>".
  void put_block(const std::string& block,
                 const std::vector<std::pair<std::string, const numkit::Tensor*>>& named);
  // Fills each tensor from "<block>/<name>"; shapes must match exactly.
  void read_block(const std::string& block, const std::vector<std::pair<std::string, numkit::Tensor*>>& named) const;

  std::vector<std::uint8_t> serialize() const;
  static Checkpoint deserialize(std::span<const std::uint8_t> bytes);
  // The trailing checksum serialize() would write.
  std::uint64_t checksum() const;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  const std::map<std::string, numkit::Tensor>& tensors() const { return tensors_; }
  const std::map<std::string, std::string>& texts() const { return texts_; }

 private:
  std::map<std::string, numkit::Tensor> tensors_;
  std::map<std::string, std::string> texts_;
};

}  // namespace ldrift::pipeline
