"""
pcskew - number of principal components in high dimensions

Estimates how many principal components carry signal in
high-dimension, low-sample-size data by sequentially testing the
skewness of PCA residual lengths.
"""

__version__ = "0.1.0"
__author__ = "pcskew Project"
__license__ = "MIT"
