// fig1
String[] fruits = {"apple" "banana"};
String joined = StringUtils.join(fruits, ", ");
System.out.println(joined);
