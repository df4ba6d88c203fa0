#include "grf/grid.hpp"

namespace grf {

Grid Grid::block(const std::vector<std::size_t>& offset,
                 const std::vector<std::size_t>& extents) const {
    if (offset.size() != dims() || extents.size() != dims())
        throw std::invalid_argument("grid block: arity mismatch");
    for (std::size_t j = 0; j < dims(); ++j)
        if (offset[j] + extents[j] > shape[j])
            throw std::invalid_argument("grid block: out of range");

    Grid out(extents);
    std::vector<std::size_t> idx(dims(), 0);
    for (std::size_t f = 0; f < out.size(); ++f) {
        std::size_t src = 0;
        for (std::size_t j = 0; j < dims(); ++j) src = src * shape[j] + offset[j] + idx[j];
        out.data[f] = data[src];
        for (std::size_t j = dims(); j-- > 0;) {
            if (++idx[j] < extents[j]) break;
            idx[j] = 0;
        }
    }
    return out;
}

}  // namespace grf
