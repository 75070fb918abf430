#include "travel/errors.hpp"

namespace travel {

DuplicateNodeId::DuplicateNodeId(std::size_t idx, long long id)
    : InputError("duplicate node id " + std::to_string(id) + " at node record " + std::to_string(idx)),
      record_index(idx) {}

UnknownEndpoint::UnknownEndpoint(std::size_t idx, long long id)
    : InputError("edge record " + std::to_string(idx) + " references unknown node id " + std::to_string(id)),
      record_index(idx) {}

SelfLoop::SelfLoop(std::size_t idx)
    : InputError("edge record " + std::to_string(idx) + " is a self-loop"), record_index(idx) {}

VersionMismatch::VersionMismatch(unsigned found, unsigned expected)
    : IoError("container version " + std::to_string(found) + ", expected " + std::to_string(expected)) {}

}  // namespace travel
