int compute(int x) {
//$ last action
int xVar = x + 1;

//$ [return value]
return xVar;
}
