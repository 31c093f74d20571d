#pragma once

#include "pslab/phasespace.hpp"

// Default model, built once per test binary.
namespace testmodel {

struct Model {
    pslab::ModeBasis basis = pslab::build_mode_basis(1.0, 150.0, 3001);
    pslab::LocalizationFrame frame = pslab::build_localization_frame(basis, 0.5, 3);
    pslab::TSpectrum spec = pslab::build_T_spectrum(frame, 1.2, 0.5);
    pslab::EnergyWindow window = pslab::build_energy_window(basis, 1.2);
};

inline const Model& model() {
    static const Model m;
    return m;
}

inline pslab::Vec symbol(pslab::Rng& rng, double target_norm) {
    const auto& m = model();
    pslab::RVec a(m.frame.n_test), b(m.frame.n_test);
    for (int i = 0; i < m.frame.n_test; ++i) {
        a(i) = pslab::gaussian(rng);
        b(i) = pslab::gaussian(rng);
    }
    pslab::Vec f = pslab::weyl_symbol(m.frame, a, b);
    return f * (target_norm / pslab::norm(m.basis, f));
}

inline pslab::Vec random_vec(pslab::Rng& rng, int n) {
    pslab::Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = pslab::complex_gaussian(rng);
    return v;
}

}  // namespace testmodel
