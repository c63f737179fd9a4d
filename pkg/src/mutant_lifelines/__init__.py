"""Follow mutants of one source file across its version history.

The pieces: line mapping through unified diffs (``diffmap``), threading
mutants into lifelines and measuring brittleness (``lifeline``), dynamic
subsumption over kill matrices (``subsumption``), selection strategies
followed through time (``selection``), loaders (``ingest``) and a seeded
history generator (``synthetic``).
"""

from .diffmap import ChangeMap, Hunk, apply_patch, compute_hunks, map_line, map_mutant, parse_unified_diff
from .errors import DomainError, FormatError, LifelineError
from .ingest import build_timeline, load_manifest, load_timeline
from .lifeline import brittleness, brittleness_curve, corpus_brittleness, heatmap, thread_mutants
from .model import KillMatrix, Lifeline, Mutant, TimePoint, Timeline, validate_timeline
from .selection import SelectionConfig, relevance_ratio, run_simulation, select
from .subsumption import kill_vector, mutation_score, subsumes, subsuming_set
from .synthetic import SynthConfig, emit_history, generate_history

__version__ = "0.1.0"
