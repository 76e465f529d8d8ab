"""
Test suite for MCP Filesystem Server.
"""
