#include "bop/envs/env.hpp"

#include <stdexcept>

#include "bop/envs/deep_sea.hpp"
#include "bop/envs/nchain.hpp"
#include "bop/envs/sparse_maze.hpp"

namespace bop::envs {

std::unique_ptr<Env> make_env(const std::string& name, std::uint64_t seed) {
  const auto colon = name.find(':');
  if (colon == std::string::npos)
    throw std::invalid_argument("make_env: expected '<kind>:<params>', got '" + name + "'");
  const std::string kind = name.substr(0, colon);
  const std::string params = name.substr(colon + 1);
  try {
    if (kind == "deep_sea") {
      return std::make_unique<DeepSea>(std::stoi(params), seed);
    }
    if (kind == "nchain") {
      return std::make_unique<NChain>(std::stoi(params), seed);
    }
    if (kind == "maze") {
      const auto x = params.find('x');
      if (x == std::string::npos) throw std::invalid_argument("maze expects WxH");
      return std::make_unique<SparseMaze>(std::stoi(params.substr(0, x)),
                                          std::stoi(params.substr(x + 1)), seed);
    }
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("make_env: bad parameters in '" + name + "'");
  }
  throw std::invalid_argument("make_env: unknown environment '" + kind + "'");
}

}  // namespace bop::envs
