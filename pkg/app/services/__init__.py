"""
Services package: estimation dispatch, logging and shared singletons
"""
