"""CT-scan COVID-19 severity prediction pipeline.

Preprocessing (slice filtering, lung/infection masking, volume packing),
a two-branch 2D classifier, a hybrid 3D residual classifier, train-val and
stratified 5-fold training protocols, and softmax-averaging ensembles with
macro-F1 reporting.
"""

__version__ = "0.1.0"
