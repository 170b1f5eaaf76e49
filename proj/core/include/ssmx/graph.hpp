#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ssmx/tensor.hpp"

namespace ssmx {

// Reverse-mode tape. Constructing a Graph makes it the active tape for the
// current thread (nested graphs restore the previous one on destruction);
// operations record themselves only while a tape is active and an input
// requires a gradient. The tape is rebuilt for every forward pass and is
// confined to one thread.
class Graph {
 public:
  Graph();
  ~Graph();
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  static Graph* current();

  struct NodeInfo {
    std::string op;
    std::vector<int> inputs;  // -1 marks an untracked input
    int output;
  };

  // Returns the id of a tensor on this tape, registering it as a leaf if
  // unseen. Identity is the data buffer, so copies of a handle share an id.
  int node_id(const Tensor& t);
  bool known(const Tensor& t) const;

  void record(std::string op, std::vector<int> input_ids, int output_id,
              std::function<void()> backward);

  // Seeds d(root)=1 and runs every recorded adjoint in reverse order.
  // root must be scalar; calling backward twice on one tape throws.
  void backward(const Tensor& root);

  size_t node_count() const { return nodes_.size(); }
  const std::vector<NodeInfo>& nodes() const { return nodes_; }

 private:
  std::unordered_map<const void*, int> ids_;
  int next_id_ = 0;
  std::vector<NodeInfo> nodes_;
  std::vector<std::function<void()>> adjoints_;
  bool backward_done_ = false;
  Graph* prev_ = nullptr;
};

}  // namespace ssmx
