"""Span-based named entity recognition with fixed-size ordinally
forgetting encodings and a grouped feed-forward classifier."""

from .errors import (BadHeader, Diverged, DimensionMismatch, DuplicateToken,
                     EmptyPool, FofeNerError, FragmentTooShort, MalformedCode,
                     MalformedLine, OverlappingGold, StaleCache)
from .fofe import (FofeCode, ForgettingFactor, Vocabulary, decode as fofe_decode,
                   encode, encode_reversed, uniqueness_check)
from .features import (CharConv, CharConvConfig, EmbeddingMatrix, FeatureBundle,
                       FeatureExtractor, Fragment, Sentence, char_conv,
                       char_vocabulary, project)
from .network import GroupedNetwork, LayerSpec, loss, softmax
from .pipeline import (CandidatePrediction, EntitySpan, LabelSet, LabeledFragment,
                       decode, enumerate_fragments, evaluate, label_candidates)
from .model import NerModel, build_model
from .training import (EpochRecord, OptimizerState, TrainingConfig, lr_at,
                       sample_batch, sgd_step, train)
from .conll import ConllDocument, document_to_conll, parse_conll, to_character_level
from .embeddings import load_embeddings, write_embedding_text
from .config import PROFILES, RunConfig, resolve_config

__version__ = "0.1.0"

__all__ = [
    "BadHeader", "CandidatePrediction", "CharConv", "CharConvConfig",
    "ConllDocument", "DimensionMismatch", "Diverged", "DuplicateToken",
    "EmbeddingMatrix", "EmptyPool", "EntitySpan", "EpochRecord",
    "FeatureBundle", "FeatureExtractor", "FofeCode", "FofeNerError",
    "ForgettingFactor", "Fragment", "FragmentTooShort", "GroupedNetwork",
    "LabelSet", "LabeledFragment", "LayerSpec", "MalformedCode",
    "MalformedLine", "NerModel", "OptimizerState", "OverlappingGold",
    "PROFILES", "RunConfig", "Sentence", "StaleCache", "TrainingConfig",
    "Vocabulary", "build_model", "char_conv", "char_vocabulary", "decode",
    "document_to_conll", "encode", "encode_reversed", "enumerate_fragments",
    "evaluate", "fofe_decode", "label_candidates", "load_embeddings", "loss",
    "lr_at", "parse_conll", "project", "resolve_config", "sample_batch",
    "sgd_step", "softmax", "to_character_level", "train", "uniqueness_check",
    "write_embedding_text",
]
