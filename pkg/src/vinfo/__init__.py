"""Usable-information estimates of dataset difficulty.

The toolkit fits two predictors from one model family (with the input; with
the null input), differences their held-out cross-entropies to estimate how
much label information the family can actually extract from the inputs, and
breaks that estimate down per instance (PVI), per attribute (input
transforms), per slice, and per token (leave-one-out artefacts). Externally
computed score files plug arbitrary model families into the same analyses.
"""

from .analysis import (GapReport, SliceReport, SliceSpec, TokenArtefact,
                       correct_incorrect_gap, correlation_of_maps, loo_artefacts,
                       overlap_length, pvi_correlation, scalar_correlation,
                       slice_by_class, slice_by_ids, slice_by_overlap_bin,
                       slice_by_scalar_range, slice_mean_pvi)
from .core import (PROB_FLOOR, AnalysisSummary, CategoricalDistribution,
                   EntropyEstimate, Predictor, PviRecord, compute_all,
                   conditional_entropy, conditional_v_information, label_entropy,
                   pvi, summarize_records, v_information)
from .data import (NULL_INPUT, Dataset, Instance, LabelSpace, select_fields,
                   serialize_input, split_dataset, subset_with_fresh_ids, tokenize,
                   whitespace_tokens)
from .errors import (ConfigurationError, EmptyDataError, UndefinedStatisticError,
                     ValidationError, VinfoError)
from .families import (FamilySpec, FeatureSpec, OptimizerSpec, TrainedPair,
                       TrainedPredictor, load_pair, predict, save_pair,
                       train_model_on, train_pair)
from .io import (RunConfig, ScoreRow, ScoreSet, import_scores, load_config,
                 load_dataset, load_scores, read_pvi_csv, read_scalar_csv,
                 write_dataset, write_pvi_csv, write_scores)
from .synthetic import (PlantedSpec, SweepRow, fraction_sweep, generate_independent,
                        generate_planted, planted_true_info_bits)
from .transforms import (TransformReport, TransformSpec, apply, attribute_report,
                         load_allowlist, placeholder_allowlist_path)

__version__ = "0.1.0"
