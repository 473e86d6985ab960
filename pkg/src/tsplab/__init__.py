"""TSP toolkit: QUBO/Ising encodings with simulated annealing, statevector
QAOA and QPE, MTZ/DFJ integer programs, exact oracles and a benchmark harness.
"""
from .encode import (DecodeReport, IsingModel, QuboModel, Tour, build_qubo_dwave_form,
                     build_qubo_sa_form, decode_assignment, qubo_to_ising, tour_cost)
from .instance import (NormalizationRecord, TspInstance, load_instance, normalize_minmax,
                       path_count, random_instance)
from .oracle import OracleResult, brute_force, held_karp

__version__ = "0.1.0"
