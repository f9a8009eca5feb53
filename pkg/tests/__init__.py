# -*- coding: utf-8 -*-
"""package init"""
