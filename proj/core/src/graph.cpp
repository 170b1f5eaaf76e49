#include "ssmx/graph.hpp"

#include <stdexcept>

namespace ssmx {

namespace {
thread_local Graph* g_current = nullptr;
}

Graph::Graph() : prev_(g_current) { g_current = this; }

Graph::~Graph() { g_current = prev_; }

Graph* Graph::current() { return g_current; }

int Graph::node_id(const Tensor& t) {
  const void* key = t.data_ptr().get();
  auto it = ids_.find(key);
  if (it != ids_.end()) return it->second;
  const int id = next_id_++;
  ids_.emplace(key, id);
  return id;
}

bool Graph::known(const Tensor& t) const {
  return ids_.count(t.data_ptr().get()) > 0;
}

void Graph::record(std::string op, std::vector<int> input_ids, int output_id,
                   std::function<void()> backward) {
  nodes_.push_back({std::move(op), std::move(input_ids), output_id});
  adjoints_.push_back(std::move(backward));
}

void Graph::backward(const Tensor& root) {
  if (backward_done_) {
    throw std::logic_error("Graph::backward called twice; double-backward is unsupported");
  }
  backward_done_ = true;
  if (root.size() != 1) {
    throw ContractError("backward root must be scalar, got shape " + shape_str(root.shape()));
  }
  if (!root.requires_grad() || !known(root)) {
    throw ContractError("backward root is not tracked by this graph");
  }
  (*root.grad_ptr())[0] = 1.0;
  for (size_t i = adjoints_.size(); i-- > 0;) {
    adjoints_[i]();
  }
}

}  // namespace ssmx
