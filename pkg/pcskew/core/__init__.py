"""
pcskew numerical core: decomposition, skewness tests, estimators and simulation
"""
