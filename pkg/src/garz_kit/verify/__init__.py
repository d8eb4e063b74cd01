"""
Verification battery: trajectory audits and multi-run studies.
"""
