"""AMR parsing with string-to-tree machine translation machinery."""

__version__ = "0.1.0"

from .graph import AmrGraph, parse_penman, emit_penman, read_amr_corpus
from .tree import Tree, parse_tree
from .alignments import AlignmentSet, count_crossings
from .transform import (disconnect, push_labels, restructure, relabel_strings,
                        reorder, to_amr, yield_amrese)
from .smatch import smatch_score, smatch_corpus
from .lm import NgramModel, AmrTreeModel
from .semcat import SemanticTaxonomy, load_taxonomy, assign_category, apply_categories
from .ghkm import RuleGrammar, extract_minimal_rules, extract_grammar, frontier_set, score_grammar
from .decoder import Decoder, derivation_to_amr, default_weights
from .tune import bleu, coordinate_ascent
from .pipeline import PipelineConfig, run_pipeline
