"""skinforge: transparent beam-steering skins for mmWave windows.

Library layout:

* waves       -- frequencies, directions, incident plane waves
* multilayer  -- transfer-matrix transmission of the bare window stack
* atom        -- cell geometry, optical transparency, response tables
* aperture    -- equivalent currents and transmitted far-field patterns
* synthesis   -- conjugate-phase targets, per-cell and swarm matching
* analysis    -- pattern metrics, transparency maps, experiment sweeps
* cli         -- the ``skinforge`` command
"""
from .analysis import (PatternMetrics, TransparencyMap, angle_sweep,
                       aperture_sweep, baseline_currents, compute_metrics,
                       glass_tensor, transparency_map, uv_peak)
from .aperture import (CurrentSheet, EmsLayout, PatternTable,
                       equivalent_currents, fields_at_angles,
                       local_transmitted_fields, pattern_cut, pixel_integral,
                       transmitted_field, uniform_currents)
from .atom import (AtomDescriptors, AtomCostMetrics, CostWeights,
                   FeasibilitySet, ResponseTable, TransmissionTensor,
                   atom_cost, atom_fill_factor, atom_optical_transmittance,
                   default_surrogate_table, lookup_tensor, mesh_fill_factor)
from .config import RunConfig, load_config
from .errors import ConfigError, InputFileError, NumericalError
from .multilayer import Layer, LayerStack, stack_coefficients, stack_transmission
from .synthesis import (OptimizerConfig, SynthesisResult, SynthesisSpec,
                        current_mismatch, ideal_current_phases, ideal_currents,
                        load_layout, mismatch_between, save_layout,
                        synthesize_per_cell, synthesize_pso)
from .waves import (C0, ComplexFieldSample, Direction, ETA0, Frequency,
                    PlaneWave, direction_to_unit_vector, wavelength)

__version__ = "0.1.0"
