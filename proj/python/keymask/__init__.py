# Copyright 2026 The keymask Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Keyword extraction, frequency filtering and keyword-aware masking."""

from ._core import (
    IGNORE_INDEX,
    ConfigError,
    ContractViolation,
    EmbeddingProvider,
    EmissionSummary,
    FormatError,
    IoError,
    KeymaskError,
    ProviderError,
    RemoteEmbeddings,
    StaticEmbeddings,
    Vocabulary,
    accuracy,
    agreement_band,
    apply_min_count,
    build_histogram,
    cohens_kappa,
    cosine,
    default_stopwords,
    emit_dataset,
    extract_keywords,
    freq_curve,
    kappa_from_matrix,
    knee_candidates,
    load_corpus,
    macro_f1,
    mask_example,
    mmr_select,
    paired_bootstrap,
    segment_words,
    tokenize_document,
    tokenize_word,
)

__version__ = "0.1.0"
