#pragma once

// Budget accounting shared by every search strategy. One generator step is
// one NFE, charged to the grid step it lands on; the zeroth step (scoring
// prior samples before any step is taken) never costs NFEs, only verifier
// calls. reserve tracks how many NFEs a run still needs to finish from its
// current accepted step at one per step; budget-aware runners keep
// used_nfe + reserve <= total_nfe so the output is always fully denoised.

#include <numeric>
#include <vector>

#include "common.hpp"

namespace noisesearch {

struct BudgetLedger {
    int total_nfe = 0;
    int used_nfe = 0;
    int verifier_calls = 0;
    int reserve = 0;
    std::vector<int> per_step_nfe;  // size T, index i = NFEs entering step i+1

    BudgetLedger(int total, int steps)
        : total_nfe(total), reserve(steps),
          per_step_nfe(static_cast<std::size_t>(steps), 0) {
        if (total < 1) throw ConfigError("ledger: total_nfe must be >= 1");
    }

    int steps() const { return static_cast<int>(per_step_nfe.size()); }

    void charge_step(int dest_step) {
        if (dest_step < 1 || dest_step > steps()) {
            throw InternalError("ledger: step charge out of range");
        }
        if (used_nfe + 1 > total_nfe) throw InternalError("ledger: budget overdrawn");
        ++used_nfe;
        ++per_step_nfe[static_cast<std::size_t>(dest_step - 1)];
    }

    void charge_verifier(int calls = 1) { verifier_calls += calls; }

    void advance_to(int accepted_step) {
        reserve = steps() - accepted_step;
        if (used_nfe + reserve > total_nfe) {
            throw InternalError("ledger: reserve invariant violated");
        }
    }

    int charged_total() const {
        return std::accumulate(per_step_nfe.begin(), per_step_nfe.end(), 0);
    }
};

}  // namespace noisesearch
