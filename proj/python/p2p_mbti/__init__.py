"""RAG-based MBTI prediction pipeline: python surface over the C++ core."""

try:
    from . import _p2p as _impl  # installed wheel layout
except ImportError:  # in-tree build: extension module on PYTHONPATH
    import _p2p as _impl

EmbeddingProvider = _impl.EmbeddingProvider
P2PError = _impl.P2PError
UserVector = _impl.UserVector
VectorIndex = _impl.VectorIndex
all_mbti_types = _impl.all_mbti_types
approx_probability = _impl.approx_probability
auc = _impl.auc
average_pool = _impl.average_pool
build_user_vector = _impl.build_user_vector
dims_to_mbti = _impl.dims_to_mbti
f1_binary = _impl.f1_binary
mbti_to_dims = _impl.mbti_to_dims
mock_feature_text = _impl.mock_feature_text
mock_provider = _impl.mock_provider
normalize_text = _impl.normalize_text
oversample = _impl.oversample
parse_mbti = _impl.parse_mbti
render_prompt = _impl.render_prompt
split_posts = _impl.split_posts
synthesize = _impl.synthesize

__all__ = [
    "EmbeddingProvider",
    "P2PError",
    "UserVector",
    "VectorIndex",
    "all_mbti_types",
    "approx_probability",
    "auc",
    "average_pool",
    "build_user_vector",
    "dims_to_mbti",
    "f1_binary",
    "mbti_to_dims",
    "mock_feature_text",
    "mock_provider",
    "normalize_text",
    "oversample",
    "parse_mbti",
    "render_prompt",
    "split_posts",
    "synthesize",
]
