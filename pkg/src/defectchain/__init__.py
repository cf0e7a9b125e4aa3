"""Two field defects in an XX spin chain: bound states, entanglement transfer, adiabatic passage.

The closed-form infinite-chain results live in :mod:`defectchain.green` and
:mod:`defectchain.transfer`; :mod:`defectchain.lattice` holds the exact
finite-chain reference and :mod:`defectchain.adiabatic` the time-dependent
sweeps.
"""
__version__ = "0.1.0"

from .errors import (ConfigurationError, NumericalFailure, NumericalWarning, ProtocolError,
                     SingularityError)
from .lattice import (ChainSpec, DefectConfig, SingleExcitationState, Spectrum, TransferRecord,
                      build_hamiltonian, chain_spectrum, concurrence_pair, diagonalize, propagate,
                      transfer_concurrence_oracle)
from .green import (BoundState, EnergyPoint, closed_form_d1, defect_concurrence_vs_distance,
                    existence_count, find_bound_states, green_free, ground_profile, scattering_t,
                    tmatrix)
from .transfer import (analytic_amplitudes, completeness, entanglement_map, gap_scaling,
                       rabi_analysis, trap_metrics, transfer_amplitude)
from .adiabatic import (Schedule, adiabaticity_metric, decoupling_check, instantaneous_gap,
                        make_schedule, propagate_time_dependent)
