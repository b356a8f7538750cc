// Builds the increasing map through a point and walks it, printing values
// with their provenance (which registry atom produced each value).
#include <cstdio>
#include <memory>

#include "carleman/sparse.hpp"

int main() {
    using namespace carleman;
    const auto seq = WeightSequence::gevrey(2.0, 60);
    auto registry = std::make_shared<AtomRegistry>(seq, 6);
    SparsePiecewiseMap h = build_core(registry, 0.25, 1.5, 16);
    extend_infinite(h);

    std::printf("h through P = (0.25, 1.5), depth 16, registry holds %zu atoms\n", registry->size());
    std::printf("%10s %22s %12s\n", "u", "h(u)", "provenance");
    for (int t = -8; t <= 8; ++t) {
        const double u = 0.25 + 0.45 * t;
        const MapEval e = h.eval(u);
        if (e.prov.at_point)
            std::printf("%10.3f %22.15f %12s\n", u, e.value, "point-P");
        else
            std::printf("%10.3f %22.15f %12zu\n", u, e.value, e.prov.atom_index);
    }
    const InverseEval inv = h.inverse(1.2);
    std::printf("h^{-1}(1.2) = %.12f (atom %zu)\n", inv.x, inv.prov.atom_index);
    return 0;
}
