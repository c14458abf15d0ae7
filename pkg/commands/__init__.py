"""
Command groups registered on the ssparse command line
"""
