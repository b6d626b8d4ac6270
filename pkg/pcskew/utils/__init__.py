"""
pcskew utility modules: configuration, filesystem, matrix ingestion and result documents
"""
