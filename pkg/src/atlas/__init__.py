"""Atlas: desk-scale verifiable inference for quantized computation graphs.

Proves correct execution of an ONNX-subset graph through a DAG of staged
sumchecks (uniform R1CS, lookup arguments with prefix-suffix table
decomposition, one-hot memory checking), commits witness columns with a
transparent Hyrax-style multilinear PCS, and retrofits zero knowledge by
folding the encoded sumcheck verifier with a random satisfying instance.
"""

__version__ = "0.1.0"
