"""Independent ISO 7730 PMV evaluation used to freeze test values.

rh is a fraction; surface-temperature iteration stops at 1e-5 K.
"""
import math
def pmv(ta, tr, vel, rh, met, clo, wme=0.0):
    pa = rh*1000*math.exp(16.6536 - 4030.183/(ta+235))
    icl = 0.155*clo
    m = met*58.15; w = wme*58.15; mw = m-w
    fcl = 1+1.29*icl if icl <= 0.078 else 1.05+0.645*icl
    hcf = 12.1*math.sqrt(vel)
    taa = ta+273; tra = tr+273
    tcla = taa + (35.5-ta)/(3.5*icl+0.1)
    p1 = icl*fcl; p2 = p1*3.96; p3 = p1*100; p4 = p1*taa
    p5 = 308.7 - 0.028*mw + p2*(tra/100)**4
    xn = tcla/100; xf = tcla/50; eps = 1e-5; n = 0
    while 100*abs(xn-xf) > eps:
        xf = (xf+xn)/2
        hcn = 2.38*abs(100*xf-taa)**0.25
        hc = max(hcf,hcn)
        xn = (p5+p4*hc-p2*xf**4)/(100+p3*hc)
        n+=1
        if n>150: raise Exception("nc")
    tcl = 100*xn-273
    hl1 = 3.05*0.001*(5733-6.99*mw-pa)
    hl2 = 0.42*(mw-58.15) if mw>58.15 else 0
    hl3 = 1.7*1e-5*m*(5867-pa)
    hl4 = 0.0014*m*(34-ta)
    hl5 = 3.96*fcl*(xn**4-(tra/100)**4)
    hl6 = fcl*hc*(tcl-ta)
    ts = 0.303*math.exp(-0.036*m)+0.028
    return ts*(mw-hl1-hl2-hl3-hl4-hl5-hl6)
if __name__ == "__main__":
    summer = dict(vel=0.1, met=1.2, clo=0.5)
    for t in (15, 20, 25, 30, 35):
        print(t, repr(pmv(t, t, rh=0.5, **summer)))
    # ISO 7730 Annex D rows (0.5 clo, 1.2 met, rh 60 %)
    for ta, tr, v, ref in [(22, 22, 0.1, -0.75), (27, 27, 0.1, 0.77), (27, 27, 0.3, 0.44),
                           (23.5, 25.5, 0.1, -0.01), (23.5, 25.5, 0.3, -0.55)]:
        print(ta, tr, v, ref, round(pmv(ta, tr, v, 0.6, 1.2, 0.5), 3))
